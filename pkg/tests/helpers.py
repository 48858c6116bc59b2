"""Shared generators and reference data for the test suite."""

import numpy as np

from fiedler_carpet.graphs import ContingencyTable, WeightedGraph

# three well separated clusters on 29 vertices
THREE_GROUP_G6 = r"\~~~~{???@_F?N?n_FwB~?N{?ng@~w@~{????C?G??@a??F???^???N_??FW??@~??CN{"
THREE_GROUP_ROOT = (-0.19099, -0.35688)
HFRJIOY = "HFRJIOY"
HFRJIOY_EDGES = [
    (0, 3), (0, 5), (1, 3), (1, 4), (1, 5), (1, 6), (1, 7), (2, 3),
    (2, 6), (3, 8), (4, 5), (4, 7), (4, 8), (5, 6), (6, 8),
]
SINGULAR_2015 = [
    1, 0.79098, 0.71857, 0.67213, 0.56862, 0.45293, 0.40896, 0.38178, 0.36325, 0.34785,
    0.32648, 0.31769, 0.2996, 0.27927, 0.26566, 0.24718, 0.22638, 0.20632, 0.18349, 0.1651,
    0.14384, 0.1359, 0.12721, 0.12092, 0.11816, 0.10374, 0.09545, 0.08278, 0.0738, 0.06371,
    0.05673, 0.04553, 0.03488, 0.03107, 0.02967, 0.02693, 0.01557, 0.00788, 0.00584, 0.00519,
    0.00191, 0.0017, 0.00099,
]
SINGULAR_2019 = [
    1, 0.77844, 0.70989, 0.65059, 0.55122, 0.43612, 0.39512, 0.36194, 0.3558, 0.33882,
    0.32174, 0.30719, 0.29601, 0.28181, 0.26865, 0.259, 0.22421, 0.1917, 0.17988, 0.1516,
    0.13671, 0.13243, 0.12397, 0.11542, 0.10598, 0.09216, 0.08889, 0.07958, 0.06835, 0.06154,
    0.05377, 0.04412, 0.03436, 0.03124, 0.02899, 0.02745, 0.01507, 0.00814, 0.00619, 0.0051,
    0.00216, 0.00129, 0.00089,
]


def random_connected_graph(rng, n, p=0.3, weighted=True):
    """Random spanning tree plus Erdos-Renyi edges; weights in (0.1, 1]."""
    w = np.zeros((n, n))
    order = rng.permutation(n)
    for i in range(1, n):
        j = order[rng.integers(0, i)]
        w[order[i], j] = 1.0
    extra = np.triu(rng.random((n, n)) < p, 1)
    w = np.triu(w + w.T, 1) + extra
    w = (w > 0).astype(float)
    if weighted:
        w *= 0.1 + 0.9 * rng.random((n, n))
    w = np.triu(w, 1)
    return WeightedGraph(w + w.T)


def random_graph(rng, n, p):
    """Unit-weight Erdos-Renyi graph, possibly disconnected."""
    w = np.triu(rng.random((n, n)) < p, 1).astype(float)
    return WeightedGraph(w + w.T)


def random_table(rng, m, n, density=1.0):
    """Random non-degenerate table; with ``density < 1`` some cells are zero.

    A monotone lattice path of positive cells from the top-left to the
    bottom-right corner keeps the row/column support connected.
    """
    c = rng.random((m, n)) * (rng.random((m, n)) < density)
    i = j = 0
    c[0, 0] += 0.5
    while (i, j) != (m - 1, n - 1):
        if j == n - 1 or (i < m - 1 and rng.random() < 0.5):
            i += 1
        else:
            j += 1
        c[i, j] += 0.5
    return ContingencyTable(c)


def block_table(rng, sizes_r, sizes_c, contrast=20.0):
    """``c_ij = p_i q_j B[g(i), h(j)]`` with a dominant diagonal in ``B``; planted labels returned."""
    k = len(sizes_r)
    g = np.repeat(np.arange(k), sizes_r)
    h = np.repeat(np.arange(k), sizes_c)
    b = 1.0 + (contrast - 1.0) * np.eye(k)
    p = 0.5 + rng.random(g.size)
    q = 0.5 + rng.random(h.size)
    return ContingencyTable(p[:, None] * q[None, :] * b[g][:, h]), g, h


def theorem_suite(count=200, seed=2024):
    """Seeded (graph, k) pairs with n in [6, 40], k in {2, 3, 4} and gap above 1e-6."""
    from fiedler_carpet.graphs import normalize_total_weight
    from fiedler_carpet.spectra import laplacian_spectrum

    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(6, 41))
        k = int(rng.integers(2, 5))
        g = random_connected_graph(rng, n, p=float(rng.uniform(0.1, 0.5)))
        lam = laplacian_spectrum(normalize_total_weight(g)).values
        if lam[k] - lam[k - 1] > 1e-6:
            out.append((g, k))
    return out
