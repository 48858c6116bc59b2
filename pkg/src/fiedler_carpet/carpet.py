"""The Fiedler carpet: joint use of the first k-1 transformed eigenvectors.

The carpet map is

    f_j(a) = sum_i d_i x_ji sum_l |x_li - a_l|,    j = 1..k-1,

where the ``x_j`` are the columns of the optimal (k-1)-dimensional vertex
representatives. A root ``a*`` yields the vector

    y_i = sum_j |x_ji - a_j| - b,    b = sum_j b_j,  b_j = sum_i d_i |x_ji - a_j|,

that is orthogonal (in the degree-weighted inner product) to the constant
vector and to every ``x_j``, together with the two centers ``a_j -/+ b_j``
per coordinate.

Because ``f`` is a sum of one-dimensional pieces ``g_l(a_l)``, each affine
between consecutive coordinates of ``x_l``, ``f`` is affine on every cell
of the grid spanned by those breakpoints. Root search therefore reduces to
one small linear solve per cell.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .clustering import KMeansResult, Partition, weighted_k_variance, weighted_kmeans
from .errors import GapTooSmall, NoRootFound, PreconditionError
from .graphs import WeightedGraph, normalize_total_weight
from .spectra import Embedding, laplacian_spectrum, vertex_representatives

DEFAULT_TOL = 1e-8
DEFAULT_DENSITY = 64
GAP_MIN = 1e-10
MAX_ENUMERATED_CELLS = 500_000
RANDOM_STARTS = 1024
POLISH_STARTS = 16
_CELL_SLACK = 1e-12


@dataclass(frozen=True)
class Carpet:
    """A (k-1)-dimensional embedding together with its sign orientation.

    ``orientation[j]`` records whether column ``j`` has been flipped
    relative to the embedding the carpet was built from.
    """

    embedding: Embedding
    orientation: Tuple[int, ...] = None

    def __post_init__(self):
        if self.orientation is None:
            object.__setattr__(self, "orientation", (1,) * self.embedding.dim)
        if len(self.orientation) != self.embedding.dim:
            raise PreconditionError("orientation mask length differs from the dimension")

    @classmethod
    def from_graph(cls, g: WeightedGraph, k: int) -> "Carpet":
        return cls(vertex_representatives(g, k - 1))

    @property
    def x(self) -> np.ndarray:
        return self.embedding.points

    @property
    def d(self) -> np.ndarray:
        return self.embedding.weights

    @property
    def dim(self) -> int:
        return self.embedding.dim

    @property
    def box(self):
        """Columnwise ``(min, max)`` of the coordinates."""
        return self.x.min(axis=0), self.x.max(axis=0)


def orient(c: Carpet, mask) -> Carpet:
    """Flip the columns where ``mask`` is -1."""
    mask = tuple(int(s) for s in mask)
    if len(mask) != c.dim or any(s not in (1, -1) for s in mask):
        raise PreconditionError(f"mask must be {c.dim} entries of +1/-1")
    sign = np.array(mask, dtype=np.float64)
    emb = Embedding(c.x * sign, c.d, c.embedding.source_eigenvalues)
    return Carpet(emb, tuple(a * b for a, b in zip(c.orientation, mask)))


def positive_mass(c: Carpet):
    """``sum_{x_ji > 0} d_i x_ji^2`` for every column ``j``."""
    pos = np.where(c.x > 0, c.x, 0.0)
    return c.d @ (pos * pos)


def orientation_of(c: Carpet, j: int) -> int:
    """+1 when column ``j`` is positively oriented (positive mass below 1/2)."""
    return 1 if positive_mass(c)[j] < 0.5 else -1


def carpet_eval(c: Carpet, a) -> np.ndarray:
    """Evaluate the carpet map at one point ``(m,)`` or a batch ``(..., m)``."""
    a = np.asarray(a, dtype=np.float64)
    flat = a.reshape(-1, c.dim)
    dx = c.d[:, None] * c.x
    dist = np.abs(c.x[None, :, :] - flat[:, None, :]).sum(axis=2)
    return (dist @ dx).reshape(a.shape)


class _Pieces:
    """Per-axis affine pieces of the separable map.

    On segment ``s`` of axis ``l`` (between breakpoints ``s`` and ``s+1``),
    ``g_l(t) = intercept[l][s] + slope[l][s] * t``.
    """

    def __init__(self, c: Carpet):
        self.c = c
        dx = c.d[:, None] * c.x
        self.breaks, self.intercept, self.slope = [], [], []
        for l in range(c.dim):
            bp = np.unique(c.x[:, l])
            if bp.size < 2:
                raise PreconditionError(f"column {l} is constant")
            mid = 0.5 * (bp[:-1] + bp[1:])
            sgn = np.sign(mid[:, None] - c.x[None, :, l])
            self.breaks.append(bp)
            self.slope.append(sgn @ dx)
            self.intercept.append((-sgn * c.x[None, :, l]) @ dx)

    def axis_values(self, l, t):
        """``g_l`` evaluated at the points ``t``; shape ``(len(t), m)``."""
        c = self.c
        return np.abs(c.x[None, :, l] - np.asarray(t)[:, None]) @ (c.d[:, None] * c.x)

    def segment(self, a):
        return [
            int(np.clip(np.searchsorted(bp, a[l], side="right") - 1, 0, bp.size - 2))
            for l, bp in enumerate(self.breaks)
        ]

    def affine(self, seg):
        mat = np.column_stack([self.slope[l][s] for l, s in enumerate(seg)])
        rhs = -np.sum([self.intercept[l][s] for l, s in enumerate(seg)], axis=0)
        return mat, rhs

    def in_cell(self, a, seg):
        for l, s in enumerate(seg):
            bp = self.breaks[l]
            slack = _CELL_SLACK * max(1.0, abs(bp[0]), abs(bp[-1]))
            if not bp[s] - slack <= a[l] <= bp[s + 1] + slack:
                return False
        return True

    def cell_count(self):
        return int(np.prod([bp.size - 1 for bp in self.breaks], dtype=np.float64))


def _residual(c, a):
    return float(np.max(np.abs(carpet_eval(c, a))))


def _enumerate_cells(pieces: _Pieces):
    """Exact affine solve in every cell; returns the best in-cell solution."""
    c = pieces.c
    m = c.dim
    sizes = [bp.size - 1 for bp in pieces.breaks]
    grids = np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij")
    idx = [gr.ravel() for gr in grids]
    mats = np.stack([pieces.slope[l][idx[l]] for l in range(m)], axis=2)
    rhs = -sum(pieces.intercept[l][idx[l]] for l in range(m))
    det = np.linalg.det(mats)
    scale = np.max(np.abs(mats), axis=(1, 2)) ** m
    ok = np.abs(det) > 1e-14 * np.maximum(scale, 1e-300)
    sol = np.full((mats.shape[0], m), np.nan)
    if ok.any():
        sol[ok] = np.linalg.solve(mats[ok], rhs[ok][..., None])[..., 0]
    inside = ok.copy()
    for l in range(m):
        bp = pieces.breaks[l]
        slack = _CELL_SLACK * max(1.0, abs(bp[0]), abs(bp[-1]))
        inside &= (sol[:, l] >= bp[idx[l]] - slack) & (sol[:, l] <= bp[idx[l] + 1] + slack)
    if not inside.any():
        return None, np.inf
    cand = sol[inside]
    res = np.max(np.abs(carpet_eval(c, cand)), axis=1)
    best = int(np.argmin(res))
    return cand[best], float(res[best])


def _polish(pieces: _Pieces, a0, max_steps=100):
    """Cell-exact Newton iteration with backtracking from ``a0``."""
    c = pieces.c
    lo, hi = c.box
    a = np.clip(np.asarray(a0, dtype=np.float64), lo, hi)
    r = _residual(c, a)
    for _ in range(max_steps):
        if r == 0.0:
            break
        # the cells touching a: the one containing it plus left neighbours at breakpoints
        seg = pieces.segment(a)
        options = []
        for l, s in enumerate(seg):
            opts = [s]
            if s > 0 and a[l] <= pieces.breaks[l][s]:
                opts.append(s - 1)
            options.append(opts)
        step = None
        for combo in itertools.product(*options):
            mat, rhs = pieces.affine(combo)
            try:
                sol = np.linalg.solve(mat, rhs)
            except np.linalg.LinAlgError:
                sol = np.linalg.lstsq(mat, rhs, rcond=None)[0]
            sol = np.clip(sol, lo, hi)
            if pieces.in_cell(sol, combo):
                rs = _residual(c, sol)
                if rs < r:
                    return sol, rs
            if step is None:
                step = sol
        improved = False
        t = 1.0
        for _ in range(40):
            trial = a + t * (step - a)
            rt = _residual(c, trial)
            if rt < r:
                a, r, improved = trial, rt, True
                break
            t *= 0.5
        if not improved:
            break
    return a, r


def _grid_axes(c: Carpet, density):
    lo, hi = c.box
    return [np.union1d(np.linspace(lo[l], hi[l], density), np.unique(c.x[:, l])) for l in range(c.dim)]


def _ranked_starts(pieces: _Pieces, density, seed, count):
    c = pieces.c
    m = c.dim
    if m <= 3:
        axes = _grid_axes(c, density)
        vals = [pieces.axis_values(l, ax) for l, ax in enumerate(axes)]
        total = 0.0
        for l, v in enumerate(vals):
            shape = [1] * m + [m]
            shape[l] = v.shape[0]
            total = total + v.reshape(shape)
        res = np.max(np.abs(total), axis=-1).ravel()
        top = np.argsort(res, kind="stable")[:count]
        coords = np.unravel_index(top, [ax.size for ax in axes])
        return np.column_stack([axes[l][coords[l]] for l in range(m)])
    lo, hi = c.box
    rng = np.random.default_rng(seed)
    pts = lo + (hi - lo) * rng.random((RANDOM_STARTS, m))
    res = np.max(np.abs(carpet_eval(c, pts)), axis=1)
    return pts[np.argsort(res, kind="stable")[:count]]


@dataclass(frozen=True)
class CarpetResult:
    a_star: np.ndarray
    b_parts: np.ndarray
    b: float
    centers: np.ndarray
    y: np.ndarray
    sigma_sq: float
    residual: float
    orientation: Tuple[int, ...]
    f_value: np.ndarray
    # sum_i d_i sum_j (distance of x_ji to its nearer center)^2
    center_variance: float


def build_y(c: Carpet, a):
    """``(y, b_parts, centers, sigma_sq)`` for the offsets ``a``.

    ``centers[j]`` is the pair ``(a_j - b_j, a_j + b_j)``.
    """
    a = np.asarray(a, dtype=np.float64)
    dev = np.abs(c.x - a)
    b_parts = c.d @ dev
    y = dev.sum(axis=1) - b_parts.sum()
    centers = np.column_stack([a - b_parts, a + b_parts])
    sigma_sq = float(np.sum(c.d * y * y))
    return y, b_parts, centers, sigma_sq


def center_distances(c: Carpet, a):
    """``| |x_ji - a_j| - b_j |``: distance of each coordinate to its nearer center."""
    a = np.asarray(a, dtype=np.float64)
    dev = np.abs(c.x - a)
    return np.abs(dev - c.d @ dev)


def center_partition(c: Carpet, a) -> Partition:
    """Vertices grouped by which side of every ``a_j`` they fall (up to 2^(k-1) groups)."""
    bits = (c.x >= np.asarray(a)).astype(np.int64)
    codes = bits @ (1 << np.arange(c.dim))
    _, labels = np.unique(codes, return_inverse=True)
    return Partition.from_labels(labels, c.d)


def _result(c: Carpet, a) -> CarpetResult:
    y, b_parts, centers, sigma_sq = build_y(c, a)
    fval = carpet_eval(c, a)
    res = CarpetResult(
        a_star=np.asarray(a, dtype=np.float64),
        b_parts=b_parts,
        b=float(b_parts.sum()),
        centers=centers,
        y=y,
        sigma_sq=sigma_sq,
        residual=float(np.max(np.abs(fval))),
        orientation=c.orientation,
        f_value=fval,
        center_variance=float(c.d @ np.sum(center_distances(c, a) ** 2, axis=1)),
    )
    return res


def solve_oriented(c: Carpet, tol=DEFAULT_TOL, density=DEFAULT_DENSITY, seed=0) -> CarpetResult:
    """Best root of the carpet map for the carpet's current orientation.

    Returns the lowest-residual candidate even if it misses ``tol``;
    :func:`carpet_root` is the checked entry point.
    """
    pieces = _Pieces(c)
    best_a, best_r = None, np.inf
    if pieces.cell_count() <= MAX_ENUMERATED_CELLS:
        best_a, best_r = _enumerate_cells(pieces)
    if best_r > tol:
        for start in _ranked_starts(pieces, density, seed, POLISH_STARTS):
            a, r = _polish(pieces, start)
            if r < best_r:
                best_a, best_r = a, r
            if best_r <= tol:
                break
    if best_a is None:
        best_a = np.zeros(c.dim)
    return _result(c, best_a)


def orientation_masks(m):
    return list(itertools.product((1, -1), repeat=m))


def carpet_root(c: Carpet, tol=DEFAULT_TOL, density=DEFAULT_DENSITY, seed=0) -> CarpetResult:
    """Search every orientation for a root with ``max|f| <= tol``.

    The lowest residual wins; ties go to the earliest mask in
    ``(+1, ..., +1), ..., (-1, ..., -1)`` order. Raises
    :class:`NoRootFound` carrying the best candidate otherwise.
    """
    best = None
    for i, mask in enumerate(orientation_masks(c.dim)):
        res = solve_oriented(orient(c, mask), tol, density, seed=[seed, i])
        if best is None or res.residual < best.residual:
            best = res
    if best.residual > tol:
        raise NoRootFound(best.residual, best)
    return best


def boundary_curves(c: Carpet, t, axis=0):
    """``f`` along the two extreme 1-D faces through coordinate ``axis``.

    Every other coordinate is held at its column minimum (``low``) or its
    column maximum (``high``). Returns ``(low, high)``, each ``(len(t), m)``.
    """
    lo, hi = c.box
    t = np.asarray(t, dtype=np.float64)
    pts_lo = np.tile(lo, (t.size, 1))
    pts_hi = np.tile(hi, (t.size, 1))
    pts_lo[:, axis] = t
    pts_hi[:, axis] = t
    return carpet_eval(c, pts_lo), carpet_eval(c, pts_hi)


def corner_values(c: Carpet):
    """``{corner_mask: f(corner)}`` where mask entry -1 picks the min, +1 the max."""
    lo, hi = c.box
    out = {}
    for mask in itertools.product((-1, 1), repeat=c.dim):
        pt = np.where(np.array(mask) < 0, lo, hi)
        out[mask] = carpet_eval(c, pt)
    return out


@dataclass(frozen=True)
class CarpetImage:
    domain: np.ndarray
    image: np.ndarray
    boundary_t: np.ndarray
    boundary_low: np.ndarray
    boundary_high: np.ndarray
    orientation: Tuple[int, ...]

    def origin_inside(self) -> bool:
        """Whether the origin lies in the convex hull of the sampled image."""
        m = self.image.shape[1]
        if m == 1:
            return bool(self.image.min() <= 0 <= self.image.max())
        from scipy.spatial import Delaunay

        pts = np.unique(np.round(self.image, 12), axis=0)
        return bool(Delaunay(pts).find_simplex(np.zeros((1, m)))[0] >= 0)


def carpet_image(c: Carpet, density=None) -> CarpetImage:
    """Sample the carpet map on a regular grid unioned with every breakpoint."""
    if c.dim not in (1, 2, 3):
        raise PreconditionError(f"carpet images support dimension 1-3, got {c.dim}")
    if density is None:
        density = DEFAULT_DENSITY if c.dim < 3 else 16
    axes = _grid_axes(c, density)
    if c.dim == 3:
        # every breakpoint plane would make the 3-D grid needlessly dense
        lo, hi = c.box
        axes = [np.linspace(lo[l], hi[l], density) for l in range(3)]
    mesh = np.meshgrid(*axes, indexing="ij")
    domain = np.column_stack([g.ravel() for g in mesh])
    image = carpet_eval(c, domain)
    t = axes[0]
    low, high = boundary_curves(c, t, axis=0)
    return CarpetImage(domain, image, t, low, high, c.orientation)


# Half-boundary cases of the two-dimensional sandwich argument.
# name: (fixed axis, fixed at 'min'/'max', swept half 'pos'/'neg',
#        component checked, required sign, orientation of (x_1, x_2))
SANDWICH_CASES = {
    "AL": (1, "min", "pos", 1, ">=", (1, -1)),
    "AR": (1, "min", "neg", 1, ">=", (-1, -1)),
    "BL": (1, "max", "pos", 1, "<=", (1, 1)),
    "BR": (1, "max", "neg", 1, "<=", (-1, 1)),
    "RB": (0, "min", "pos", 0, ">=", (-1, 1)),
    "RA": (0, "min", "neg", 0, ">=", (-1, -1)),
    "LB": (0, "max", "pos", 0, "<=", (1, 1)),
    "LA": (0, "max", "neg", 0, "<=", (1, -1)),
}


@dataclass(frozen=True)
class SandwichCase:
    name: str
    extreme: float
    holds: Optional[bool]
    skipped: Optional[str] = None


def sandwich_check(c: Carpet, atol=1e-9):
    """Check the sign of each half boundary under the orientation its bound needs.

    Along a boundary face ``f`` is piecewise linear in the swept coordinate,
    so its extreme over a half-interval is attained at a breakpoint or an
    endpoint; those are the points evaluated.
    """
    if c.dim != 2:
        raise PreconditionError("the sandwich check is defined for two-dimensional carpets")
    mass = positive_mass(c)
    out = []
    for name, (fixed, where, half, comp, rel, need) in SANDWICH_CASES.items():
        if np.any(np.abs(mass - 0.5) < 1e-12):
            out.append(SandwichCase(name, float("nan"), None, "orientation undecided (mass 1/2)"))
            continue
        current = tuple(1 if m < 0.5 else -1 for m in mass)
        flip = tuple(1 if cur == req else -1 for cur, req in zip(current, need))
        oc = orient(c, flip)
        lo, hi = oc.box
        sweep = 1 - fixed
        if half == "pos":
            a_lo, a_hi = 0.0, hi[sweep]
        else:
            a_lo, a_hi = lo[sweep], 0.0
        xs = oc.x[:, sweep]
        t = np.concatenate([[a_lo, a_hi], xs[(xs > a_lo) & (xs < a_hi)]])
        if half == "pos":
            t = t[t > 0] if np.any(t > 0) else t
        pts = np.empty((t.size, 2))
        pts[:, sweep] = t
        pts[:, fixed] = lo[fixed] if where == "min" else hi[fixed]
        vals = carpet_eval(oc, pts)[:, comp]
        if rel == ">=":
            ext = float(vals.min())
            ok = ext >= -atol
        else:
            ext = float(vals.max())
            ok = ext <= atol
        out.append(SandwichCase(name, ext, bool(ok)))
    return out


def _pad_labels(x, w, labels, k):
    """Split off the costliest points as singletons until ``k`` groups exist.

    Splitting never raises the k-variance.
    """
    labels = np.asarray(labels).copy()
    groups = int(labels.max()) + 1
    while groups < k:
        cent = np.zeros((groups, x.shape[1]))
        vol = np.bincount(labels, weights=w, minlength=groups)
        np.add.at(cent, labels, w[:, None] * x)
        cent /= vol[:, None]
        cost = w * np.sum((x - cent[labels]) ** 2, axis=1)
        counts = np.bincount(labels, minlength=groups)
        cost = np.where(counts[labels] >= 2, cost, -np.inf)
        labels[int(np.argmax(cost))] = groups
        groups += 1
    return labels


@dataclass(frozen=True)
class GapReport:
    k: int
    eigenvalues: np.ndarray
    bound: float
    achieved: float
    clusters: int
    clamped: bool
    holds: bool
    kmeans: KMeansResult
    carpet: Optional[CarpetResult]
    root_found: bool
    chain_holds: Optional[bool]
    center_variance: Optional[float]
    center_partition_variance: Optional[float]


def theorem_bound_report(
    g: WeightedGraph, k: int, seed=0, restarts=16, tol=DEFAULT_TOL, with_carpet=True, spectrum=None
) -> GapReport:
    """Weighted 2^(k-1)-variance of the (k-1)-dim representatives against the spectral bound.

    The bound is ``(lambda_1 + ... + lambda_{k-1}) / lambda_k``. With
    ``with_carpet`` the root of the carpet map is also searched and the
    variance of its ``y`` vector is compared with the k-means optimum.
    """
    g.require_connected()
    gn = normalize_total_weight(g)
    if not 2 <= k <= gn.n - 1:
        raise PreconditionError(f"k must lie in [2, {gn.n - 1}], got {k}")
    es = spectrum if spectrum is not None else laplacian_spectrum(gn)
    lam = es.values
    if lam[k] - lam[k - 1] <= GAP_MIN:
        raise GapTooSmall(f"lambda_{k - 1} = {lam[k - 1]:.12g} and lambda_{k} = {lam[k]:.12g} coincide")
    emb = vertex_representatives(gn, k - 1, es)
    clusters = 2 ** (k - 1)
    clamped = clusters > gn.n
    clusters = min(clusters, gn.n)
    bound = float(np.sum(lam[1:k]) / lam[k])
    carpet = None
    root_found = False
    chain = center_var = center_part_var = None
    init = []
    if with_carpet:
        cp = Carpet(emb)
        try:
            carpet = carpet_root(cp, tol=tol)
            root_found = True
        except NoRootFound as exc:
            carpet = exc.best
        center_var = carpet.center_variance
        oriented = orient(cp, carpet.orientation)
        part = center_partition(oriented, carpet.a_star)
        center_part_var = weighted_k_variance(oriented.x, oriented.d, part)
        # the center-induced partition is one more k-means start
        init.append(_pad_labels(emb.points, emb.weights, part.labels, clusters))
    km = weighted_kmeans(emb.points, emb.weights, clusters, seed=seed, restarts=restarts, init=init)
    achieved = km.variance
    if with_carpet:
        chain = bool(achieved <= carpet.sigma_sq + 1e-8)
    return GapReport(
        k=k,
        eigenvalues=lam[1 : k + 1].copy(),
        bound=bound,
        achieved=achieved,
        clusters=clusters,
        clamped=clamped,
        holds=bool(achieved <= bound + 1e-8),
        kmeans=km,
        carpet=carpet,
        root_found=root_found,
        chain_holds=chain,
        center_variance=center_var,
        center_partition_variance=center_part_var,
    )
