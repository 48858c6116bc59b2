"""Weighted k-means, weighted k-variance, normalized cuts and exhaustive oracles."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import EmptyCluster, NumericalFailure, PreconditionError, TooLarge
from .graphs import WeightedGraph, normalize_total_weight
from .spectra import laplacian_spectrum

DEFAULT_RESTARTS = 16
MAX_ITER = 500
REL_STOP = 1e-12
BRUTE_FORCE_MAX_N = 14
CUT_BRUTE_FORCE_MAX_N = 12
MAX_PARTITIONS = 20_000_000
_CHUNK = 50_000


@dataclass(frozen=True)
class Partition:
    labels: np.ndarray
    k: int
    volumes: np.ndarray

    @classmethod
    def from_labels(cls, labels, weights=None, k=None) -> "Partition":
        labels = np.asarray(labels, dtype=np.int64)
        if labels.ndim != 1:
            raise PreconditionError("labels must be one-dimensional")
        if k is None:
            k = int(labels.max()) + 1 if labels.size else 0
        if labels.size and (labels.min() < 0 or labels.max() >= k):
            raise PreconditionError(f"labels must lie in [0, {k})")
        counts = np.bincount(labels, minlength=k)
        if np.any(counts == 0):
            raise EmptyCluster(f"cluster {int(np.argmin(counts))} is empty")
        w = np.ones(labels.size) if weights is None else np.asarray(weights, dtype=np.float64)
        volumes = np.bincount(labels, weights=w, minlength=k)
        labels = labels.copy()
        labels.setflags(write=False)
        return cls(labels, int(k), volumes)

    @property
    def n(self) -> int:
        return self.labels.size

    def clusters(self) -> List[List[int]]:
        return [np.flatnonzero(self.labels == c).tolist() for c in range(self.k)]

    def indicator(self) -> np.ndarray:
        return (self.labels[:, None] == np.arange(self.k)[None, :]).astype(np.float64)


@dataclass(frozen=True)
class KMeansResult:
    partition: Partition
    centers: np.ndarray
    variance: float
    iterations: int
    seed: int
    restart: int = 0
    history: tuple = field(default=(), repr=False)


def _points(points):
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return x


def _check_weights(weights, n):
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n,):
        raise PreconditionError(f"expected {n} weights, got shape {w.shape}")
    if np.any(w <= 0):
        raise PreconditionError("weights must be positive")
    return w


def weighted_centroids(points, weights, labels, k):
    x = _points(points)
    vol = np.bincount(labels, weights=weights, minlength=k)
    if np.any(vol <= 0):
        raise EmptyCluster("centroid of an empty cluster")
    sums = np.zeros((k, x.shape[1]))
    np.add.at(sums, labels, weights[:, None] * x)
    return sums / vol[:, None]


def weighted_k_variance(points, weights, p: Partition) -> float:
    """``sum_a sum_{j in V_a} d_j |r_j - c_a|^2`` with weighted cluster centroids ``c_a``."""
    x = _points(points)
    w = _check_weights(weights, x.shape[0])
    if p.n != x.shape[0]:
        raise PreconditionError("partition and points disagree in size")
    c = weighted_centroids(x, w, p.labels, p.k)
    diff = x - c[p.labels]
    return float(np.sum(w * np.einsum("ij,ij->i", diff, diff)))


def _sq_dists(x, centers):
    diff = x[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kmeanspp(x, w, k, rng):
    n = x.shape[0]
    chosen = [int(rng.choice(n, p=w / w.sum()))]
    best = _sq_dists(x, x[chosen])[:, 0]
    for _ in range(1, k):
        prob = w * best
        if prob.sum() <= 0:
            # all remaining mass sits on chosen points
            prob = w.copy()
            prob[chosen] = 0.0
        idx = int(rng.choice(n, p=prob / prob.sum()))
        chosen.append(idx)
        best = np.minimum(best, _sq_dists(x, x[idx : idx + 1])[:, 0])
    return x[chosen].copy()


def _repair_empty(x, w, labels, centers, k):
    counts = np.bincount(labels, minlength=k)
    for empty in np.flatnonzero(counts == 0):
        diff = x - centers[labels]
        cost = w * np.einsum("ij,ij->i", diff, diff)
        donors = counts[labels] >= 2
        cost = np.where(donors, cost, -np.inf)
        idx = int(np.argmax(cost))
        counts[labels[idx]] -= 1
        labels[idx] = empty
        counts[empty] = 1
        centers[empty] = x[idx]
    return labels


def _lloyd(x, w, k, rng, max_iter, centers=None):
    if centers is None:
        centers = _kmeanspp(x, w, k, rng)
    labels = None
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        new = np.argmin(_sq_dists(x, centers), axis=1)
        new = _repair_empty(x, w, new, centers, k)
        centers = weighted_centroids(x, w, new, k)
        diff = x - centers[new]
        obj = float(np.sum(w * np.einsum("ij,ij->i", diff, diff)))
        unchanged = labels is not None and np.array_equal(new, labels)
        if history and obj > history[-1] * (1 + 1e-12) + 1e-300:
            raise NumericalFailure(f"Lloyd objective increased: {history[-1]!r} -> {obj!r}")
        small = bool(history) and history[-1] - obj <= REL_STOP * max(history[-1], 1e-300)
        labels = new
        history.append(obj)
        if unchanged or small:
            break
    return labels, it, tuple(history)


def weighted_kmeans(
    points, weights, k, seed=0, restarts=DEFAULT_RESTARTS, max_iter=MAX_ITER, init=()
) -> KMeansResult:
    """Weighted Lloyd iterations from weighted k-means++ seeds; best of ``restarts``.

    Restart ``r`` draws from ``numpy.random.default_rng([seed, r])``, so the
    outcome is a pure function of the inputs and ``seed``. Each label array
    in ``init`` adds one more run started from that partition's centroids,
    numbered after the random restarts. Ties in the final objective go to
    the lowest restart index.
    """
    x = _points(points)
    n = x.shape[0]
    w = _check_weights(weights, n)
    if not 1 <= k <= n:
        raise PreconditionError(f"k must lie in [1, {n}], got {k}")
    if restarts < 1:
        raise PreconditionError("restarts must be positive")
    starts = [None] * restarts
    for labels in init:
        labels = Partition.from_labels(labels, w, k).labels
        starts.append(weighted_centroids(x, w, labels, k))
    best = None
    for r, centers in enumerate(starts):
        rng = np.random.default_rng([seed, r])
        labels, iters, history = _lloyd(x, w, k, rng, max_iter, centers)
        part = Partition.from_labels(labels, w, k)
        var = weighted_k_variance(x, w, part)
        if best is None or var < best.variance:
            centers = weighted_centroids(x, w, part.labels, k)
            best = KMeansResult(part, centers, var, iters, seed, r, history)
    return best


def stirling2(n, k):
    """Number of partitions of ``n`` items into exactly ``k`` nonempty blocks."""
    row = [1] + [0] * k
    for i in range(1, n + 1):
        new = [0] * (k + 1)
        for j in range(1, min(i, k) + 1):
            new[j] = j * row[j] + row[j - 1]
        row = new
    return row[k]


def set_partitions(n, k):
    """All proper ``k``-partitions of ``range(n)`` as restricted growth strings.

    Returns an ``(S(n,k), n)`` integer array; row ``b`` labels the items.
    """
    if not 1 <= k <= n:
        raise PreconditionError(f"need 1 <= k <= n, got k={k}, n={n}")
    count = stirling2(n, k)
    if count > MAX_PARTITIONS:
        raise TooLarge(f"{count} partitions of {n} items into {k} blocks")
    strings = np.zeros((1, 1), dtype=np.int8)
    used = np.ones(1, dtype=np.int8)
    for i in range(1, n):
        remaining = n - i - 1
        parts_s, parts_u = [], []
        for c in range(k):
            ok = c <= used
            new_used = np.maximum(used, c + 1)
            ok &= new_used + remaining >= k
            if not ok.any():
                continue
            sel = strings[ok]
            parts_s.append(np.hstack([sel, np.full((sel.shape[0], 1), c, dtype=np.int8)]))
            parts_u.append(new_used[ok])
        strings = np.vstack(parts_s)
        used = np.concatenate(parts_u)
    if n == 1:
        strings = strings[used >= k]
    order = np.lexsort(strings.T[::-1])
    return strings[order].astype(np.int64)


def _onehot(labels, k):
    return (labels[..., None] == np.arange(k)).astype(np.float64)


def brute_force_min_variance(points, weights, k):
    """Global minimum of the weighted k-variance by enumerating all proper k-partitions."""
    x = _points(points)
    n = x.shape[0]
    w = _check_weights(weights, n)
    if n > BRUTE_FORCE_MAX_N:
        raise TooLarge(f"exhaustive k-variance limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    strings = set_partitions(n, k)
    wx = w[:, None] * x
    wxx = w * np.einsum("ij,ij->i", x, x)
    best_val, best_row = np.inf, None
    for start in range(0, strings.shape[0], _CHUNK):
        p = _onehot(strings[start : start + _CHUNK], k)
        sw = np.einsum("bnk,n->bk", p, w)
        swx = np.einsum("bnk,nd->bkd", p, wx)
        swxx = np.einsum("bnk,n->bk", p, wxx)
        val = np.sum(swxx - np.einsum("bkd,bkd->bk", swx, swx) / sw, axis=1)
        i = int(np.argmin(val))
        if val[i] < best_val:
            best_val, best_row = val[i], start + i
    part = Partition.from_labels(strings[best_row], w, k)
    return part, weighted_k_variance(x, w, part)


def normalized_cut_forms(g: WeightedGraph, p: Partition):
    """The pairwise, complement and ``k - sum`` forms of the k-way normalized cut."""
    gn = normalize_total_weight(g)
    if p.n != gn.n:
        raise PreconditionError("partition and graph disagree in size")
    ind = p.indicator()
    block = ind.T @ gn.weights @ ind
    vol = ind.T @ gn.degrees
    if np.any(vol <= 0):
        raise EmptyCluster("cluster with zero volume")
    k = p.k
    pairwise = 0.0
    for a in range(k - 1):
        for b in range(a + 1, k):
            pairwise += (1.0 / vol[a] + 1.0 / vol[b]) * block[a, b]
    within = np.diag(block)
    complement = float(np.sum((vol - within) / vol))
    k_minus = float(k - np.sum(within / vol))
    return float(pairwise), complement, k_minus


def normalized_cut(g: WeightedGraph, p: Partition) -> float:
    """``sum_a w(V_a, complement) / Vol(V_a)``, cross-checked against the other two forms."""
    pairwise, complement, k_minus = normalized_cut_forms(g, p)
    if abs(pairwise - complement) > 1e-10 or abs(k_minus - complement) > 1e-10:
        raise NumericalFailure(
            f"normalized cut forms disagree: {pairwise!r}, {complement!r}, {k_minus!r}"
        )
    return complement


def brute_force_normalized_cut(g: WeightedGraph, k):
    """Minimum normalized cut over all proper k-partitions."""
    gn = normalize_total_weight(g)
    n = gn.n
    if n > CUT_BRUTE_FORCE_MAX_N:
        raise TooLarge(f"exhaustive normalized cut limited to n <= {CUT_BRUTE_FORCE_MAX_N}, got {n}")
    strings = set_partitions(n, k)
    best_val, best_row = np.inf, None
    for start in range(0, strings.shape[0], _CHUNK):
        p = _onehot(strings[start : start + _CHUNK], k)
        vol = np.einsum("bnk,n->bk", p, gn.degrees)
        within = np.einsum("bik,ij,bjk->bk", p, gn.weights, p)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = k - np.sum(within / vol, axis=1)
        val = np.where(np.all(vol > 0, axis=1), val, np.inf)
        i = int(np.argmin(val))
        if val[i] < best_val:
            best_val, best_row = val[i], start + i
    part = Partition.from_labels(strings[best_row], gn.degrees, k)
    return part, normalized_cut(gn, part)


@dataclass(frozen=True)
class CutBoundReport:
    k: int
    lambda_sum: float
    fk: float
    holds: bool
    partition: Partition


def check_cut_lower_bound(g: WeightedGraph, k) -> CutBoundReport:
    """Compare ``lambda_1 + ... + lambda_{k-1}`` with the exact k-way normalized cut."""
    g.require_connected()
    gn = normalize_total_weight(g)
    lam = laplacian_spectrum(gn).values
    lam_sum = float(np.sum(lam[1:k]))
    part, fk = brute_force_normalized_cut(gn, k)
    return CutBoundReport(k, lam_sum, fk, lam_sum <= fk + 1e-9, part)
