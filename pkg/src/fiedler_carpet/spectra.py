"""Eigen- and singular value decompositions and the optimal representatives built on them.

Representatives are unique only up to rotations inside eigenspaces of
repeated eigenvalues (graph symmetries produce these); callers that need
well-defined coordinates should check the relevant spectral gaps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure, PreconditionError, RankDeficient
from .graphs import (
    ContingencyTable,
    WeightedGraph,
    laplacian,
    normalize_total_weight,
    normalized_laplacian,
    normalized_table,
)
from .jacobi import jacobi_eigh, one_sided_jacobi

SIGN_ATOL = 1e-12
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class EigenSystem:
    values: np.ndarray
    vectors: np.ndarray

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class SvdSystem:
    """``c == left @ diag(singulars) @ right.T`` over the nonzero triplets."""

    singulars: np.ndarray
    left: np.ndarray
    right: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.singulars)


@dataclass(frozen=True)
class Embedding:
    """Rows of ``points`` are representatives; ``weights`` sum to 1."""

    points: np.ndarray
    weights: np.ndarray
    source_eigenvalues: np.ndarray

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]


def _first_significant(vectors):
    idx = np.argmax(np.abs(vectors) > SIGN_ATOL, axis=0)
    return vectors[idx, np.arange(vectors.shape[1])]


def canonical_signs(vectors):
    """+1/-1 per column making its first coordinate above 1e-12 in size positive."""
    lead = _first_significant(vectors)
    return np.where(lead < 0, -1.0, 1.0)


def eigh(a, method="jacobi") -> EigenSystem:
    """Full spectrum of a symmetric matrix, ascending, with canonical signs.

    ``method="lapack"`` delegates to :func:`numpy.linalg.eigh` and exists as
    an independent cross-check; the Jacobi path is the default.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise PreconditionError("eigh needs a square matrix")
    if not np.all(np.isfinite(a)):
        raise PreconditionError("matrix has non-finite entries")
    if not np.array_equal(a, a.T):
        if np.abs(a - a.T).max() > 1e-12 * max(1.0, np.abs(a).max()):
            raise PreconditionError("matrix is not symmetric")
        a = 0.5 * (a + a.T)
    if method == "jacobi":
        values, vectors = jacobi_eigh(a)
    elif method == "lapack":
        values, vectors = np.linalg.eigh(a)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    vectors = vectors * canonical_signs(vectors)
    # ascending values; exact ties ordered by the vectors' coordinates
    keys = tuple(vectors[::-1]) + (values,)
    order = np.lexsort(keys)
    return EigenSystem(values[order], vectors[:, order])


def svd(c) -> SvdSystem:
    """Singular triplets with ``s > 1e-12 * s_max``, nonincreasing.

    Left vectors carry the canonical sign; right vectors follow them.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2:
        raise PreconditionError("svd needs a 2-D array")
    if not np.all(np.isfinite(c)):
        raise PreconditionError("matrix has non-finite entries")
    m, n = c.shape
    transposed = m < n
    g = c.T if transposed else c
    h, v = one_sided_jacobi(g)
    s = np.linalg.norm(h, axis=0)
    order = np.argsort(-s, kind="stable")
    s, h, v = s[order], h[:, order], v[:, order]
    if s.size == 0 or s[0] == 0:
        keep = 0
    else:
        keep = int(np.count_nonzero(s > RANK_RTOL * s[0]))
    s, h, v = s[:keep], h[:, :keep], v[:, :keep]
    u = h / s
    left, right = (v, u) if transposed else (u, v)
    signs = canonical_signs(left) if keep else np.ones(0)
    left, right = left * signs, right * signs
    if not (np.all(np.isfinite(left)) and np.all(np.isfinite(right))):
        raise NumericalFailure("non-finite singular vectors")
    return SvdSystem(s, left, right)


def laplacian_spectrum(g: WeightedGraph, method="jacobi") -> EigenSystem:
    return eigh(normalized_laplacian(g), method=method)


def vertex_representatives(g: WeightedGraph, d: int, spectrum: EigenSystem = None) -> Embedding:
    """Optimal ``d``-dimensional vertex representatives ``D^-1/2 u_1 .. D^-1/2 u_d``.

    ``spectrum`` may be passed to reuse an already computed decomposition of
    the normalized Laplacian.
    """
    g.require_connected()
    if not 1 <= d <= g.n - 1:
        raise PreconditionError(f"dimension must lie in [1, {g.n - 1}], got {d}")
    gn = normalize_total_weight(g)
    es = spectrum if spectrum is not None else laplacian_spectrum(gn)
    x = es.vectors[:, 1 : d + 1] / np.sqrt(gn.degrees)[:, None]
    return Embedding(x, gn.degrees.copy(), es.values[1 : d + 1].copy())


def correspondence_representatives(t: ContingencyTable, k: int, system: SvdSystem = None):
    """Row and column representatives from singular pairs ``1..k`` of the normalized table."""
    t.require_non_degenerate()
    tn = t.normalized()
    sv = system if system is not None else svd(normalized_table(tn))
    if sv.rank < 2:
        raise RankDeficient("table has only the trivial singular pair")
    if not 1 <= k <= sv.rank - 1:
        raise RankDeficient(f"k must lie in [1, {sv.rank - 1}], got {k}")
    rows = sv.left[:, 1 : k + 1] / np.sqrt(tn.row_sums)[:, None]
    cols = sv.right[:, 1 : k + 1] / np.sqrt(tn.col_sums)[:, None]
    vals = sv.singulars[1 : k + 1].copy()
    return (
        Embedding(rows, tn.row_sums.copy(), vals),
        Embedding(cols, tn.col_sums.copy(), vals.copy()),
    )


def _as_points(x, n):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != n:
        raise PreconditionError(f"expected {n} representatives, got {x.shape[0]}")
    return x


def energy(g: WeightedGraph, x) -> float:
    """Pairwise energy ``sum_{i<j} w_ij |r_i - r_j|^2`` of the rows of ``x``."""
    x = _as_points(x, g.n)
    iu, ju = np.triu_indices(g.n, 1)
    diff = x[iu] - x[ju]
    return float(np.sum(g.weights[iu, ju] * np.einsum("ij,ij->i", diff, diff)))


def energy_trace(g: WeightedGraph, x) -> float:
    """Same quantity as :func:`energy` written as ``tr(X^T L X)``."""
    x = _as_points(x, g.n)
    return float(np.trace(x.T @ laplacian(g) @ x))
