"""Weighted graphs, contingency tables and the matrices derived from them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    Degenerate,
    Disconnected,
    NegativeEntry,
    NotNormalized,
    PreconditionError,
    SelfLoop,
    ZeroDegree,
)

NORMALIZED_ATOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def _components(n, edges):
    """Union-find over ``edges``; returns a root label per vertex."""
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    return [find(i) for i in range(n)]


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph given by a symmetric nonnegative weight matrix.

    Vertices with zero degree and disconnected graphs can be stored (an
    edgeless graph6 string is still a graph), but every spectral operation
    rejects them.
    """

    weights: np.ndarray
    degrees: np.ndarray = field(init=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise PreconditionError(f"weight matrix must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise PreconditionError("weight matrix has non-finite entries")
        if np.any(w < 0):
            raise NegativeEntry("negative edge weight")
        if np.any(np.diag(w) != 0):
            raise SelfLoop("nonzero diagonal (self-loop)")
        if not np.array_equal(w, w.T):
            raise PreconditionError("weight matrix is not symmetric")
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "degrees", _frozen(w.sum(axis=1)))

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def total_degree(self) -> float:
        return float(self.degrees.sum())

    def edges(self):
        """Index pairs ``(i, j)``, ``i < j``, carrying positive weight."""
        iu, ju = np.nonzero(np.triu(self.weights, 1) > 0)
        return list(zip(iu.tolist(), ju.tolist()))

    def is_connected(self) -> bool:
        if self.n == 0:
            return False
        roots = _components(self.n, self.edges())
        return len(set(roots)) == 1

    def is_normalized(self) -> bool:
        return abs(self.total_degree - 1.0) <= NORMALIZED_ATOL

    def require_connected(self):
        if np.any(self.degrees <= 0):
            raise ZeroDegree("graph has a vertex of zero degree")
        if not self.is_connected():
            raise Disconnected("graph is not connected")


@dataclass(frozen=True)
class ContingencyTable:
    """Nonnegative ``m x n`` table with its row and column margins.

    A directed graph is stored as a square table whose ``(i, j)`` entry is
    the weight of the ``j -> i`` edge; rows then carry in-degrees and
    columns out-degrees.
    """

    entries: np.ndarray
    row_labels: Optional[Sequence[str]] = None
    col_labels: Optional[Sequence[str]] = None
    row_sums: np.ndarray = field(init=False)
    col_sums: np.ndarray = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.entries, dtype=np.float64)
        if c.ndim != 2 or 0 in c.shape:
            raise PreconditionError(f"table must be a nonempty 2-D array, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise PreconditionError("table has non-finite entries")
        if np.any(c < 0):
            raise NegativeEntry("negative table entry")
        object.__setattr__(self, "entries", _frozen(c))
        object.__setattr__(self, "row_sums", _frozen(c.sum(axis=1)))
        object.__setattr__(self, "col_sums", _frozen(c.sum(axis=0)))
        for name, size in (("row_labels", c.shape[0]), ("col_labels", c.shape[1])):
            labels = getattr(self, name)
            if labels is not None:
                labels = tuple(str(s) for s in labels)
                if len(labels) != size:
                    raise PreconditionError(f"{name} has {len(labels)} entries, expected {size}")
                object.__setattr__(self, name, labels)

    @classmethod
    def directed(cls, w, labels=None) -> "ContingencyTable":
        """Square table with the diagonal forced to zero."""
        w = np.array(w, dtype=np.float64, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise PreconditionError("directed weight matrix must be square")
        np.fill_diagonal(w, 0.0)
        return cls(w, labels, labels)

    @property
    def shape(self):
        return self.entries.shape

    @property
    def total(self) -> float:
        return float(self.entries.sum())

    def transpose(self) -> "ContingencyTable":
        return ContingencyTable(self.entries.T, self.col_labels, self.row_labels)

    def normalized(self) -> "ContingencyTable":
        total = self.total
        if total <= 0:
            raise PreconditionError("table has no positive entry")
        return ContingencyTable(self.entries / total, self.row_labels, self.col_labels)

    def has_positive_margins(self) -> bool:
        return bool(np.all(self.row_sums > 0) and np.all(self.col_sums > 0))

    def non_degenerate(self) -> bool:
        """Irreducibility of ``C C^T`` (``m <= n``) or ``C^T C`` (``m > n``).

        Checked as connectivity of the bipartite row/column support graph,
        which is equivalent once all margins are positive.
        """
        if not self.has_positive_margins():
            return False
        m, n = self.shape
        ri, cj = np.nonzero(self.entries > 0)
        roots = _components(m + n, zip(ri.tolist(), (cj + m).tolist()))
        return len(set(roots)) == 1

    def require_positive_margins(self):
        if not self.has_positive_margins():
            raise ZeroDegree("table has a zero row or column sum")

    def require_non_degenerate(self):
        self.require_positive_margins()
        if not self.non_degenerate():
            raise Degenerate("table is degenerate (reducible C C^T)")


def normalize_total_weight(g: WeightedGraph) -> WeightedGraph:
    """Rescale the weights so that the degrees sum to 1."""
    total = g.total_degree
    if total <= 0:
        raise PreconditionError("all-zero weight matrix cannot be normalized")
    if total == 1.0:
        return g
    return WeightedGraph(g.weights / total)


def laplacian(g: WeightedGraph) -> np.ndarray:
    return np.diag(g.degrees) - g.weights


def _inv_sqrt_degrees(g):
    if np.any(g.degrees <= 0):
        raise ZeroDegree("normalized matrices need positive degrees")
    return 1.0 / np.sqrt(g.degrees)


def _symmetrize(a):
    # exact mirror: (a + a.T) is bitwise symmetric
    return 0.5 * (a + a.T)


def normalized_adjacency(g: WeightedGraph) -> np.ndarray:
    """``D^-1/2 W D^-1/2``."""
    s = _inv_sqrt_degrees(g)
    return _symmetrize(s[:, None] * g.weights * s[None, :])


def normalized_laplacian(g: WeightedGraph) -> np.ndarray:
    """``I - D^-1/2 W D^-1/2``; unchanged by rescaling the weights."""
    lap = np.eye(g.n) - normalized_adjacency(g)
    np.fill_diagonal(lap, 1.0)
    return lap


def normalized_modularity(g: WeightedGraph) -> np.ndarray:
    """``W_D - sqrt(d) sqrt(d)^T`` for a graph of total weight 1."""
    if not g.is_normalized():
        raise NotNormalized("normalized modularity needs degrees summing to 1")
    sd = np.sqrt(g.degrees)
    return _symmetrize(normalized_adjacency(g) - np.outer(sd, sd))


def normalized_table(t: ContingencyTable) -> np.ndarray:
    """``D_row^-1/2 C D_col^-1/2`` of the table scaled to total 1."""
    t.require_positive_margins()
    tn = t.normalized()
    return tn.entries / np.sqrt(tn.row_sums)[:, None] / np.sqrt(tn.col_sums)[None, :]
