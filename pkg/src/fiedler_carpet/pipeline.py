"""Batch workflows behind the command-line tool.

Every ``run_*`` function returns ``(report, files)``: a JSON-ready dict and
a mapping of output file names to SVG text. Nothing here touches the
filesystem except :func:`load_input` and :func:`save_outputs`.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from . import __version__
from .carpet import (
    Carpet,
    carpet_image,
    orient,
    orientation_masks,
    theorem_bound_report,
)
from .clustering import (
    CUT_BRUTE_FORCE_MAX_N,
    MAX_PARTITIONS,
    Partition,
    check_cut_lower_bound,
    normalized_cut,
    stirling2,
    weighted_kmeans,
)
from .discrepancy import (
    BiPartition,
    block_phi_square,
    chi_square,
    md_exact,
    md_sampled,
)
from .errors import BlockTooLarge, ParseError, PreconditionError
from .formats import parse_csv_table, parse_edge_list, parse_graph6
from .graphs import ContingencyTable, WeightedGraph, normalize_total_weight, normalized_table
from .spectra import correspondence_representatives, laplacian_spectrum, svd, vertex_representatives
from .svg import curves_svg, heatmap_svg, scatter_svg, write_atomic

SCHEMA = 1
GAP_WINDOW = 10
MD_SAMPLES = 4096


class LoadedInput:
    def __init__(self, descriptor, kind, data, raw: bytes):
        self.descriptor = descriptor
        self.kind = kind
        self.data = data
        self.sha256 = hashlib.sha256(raw).hexdigest()

    def describe(self, **extra):
        out = {"source": self.descriptor, "kind": self.kind, "sha256": self.sha256}
        out.update(extra)
        return out


def load_input(source: str, kind=None) -> LoadedInput:
    """Read a graph or table.

    ``g6:<string>`` is a literal graph6 graph. Files ending in ``.g6`` are
    graph6, ``.csv`` are tables and anything else is an edge list.
    """
    if source.startswith("g6:"):
        raw = source[3:].encode("ascii", errors="replace")
        if kind == "table":
            raise ParseError("a graph6 literal cannot be read as a table")
        return LoadedInput(source, "graph", parse_graph6(raw), raw)
    try:
        with open(source, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {source}: {exc.strerror}") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError("input is not UTF-8", exc.start) from None
    ext = os.path.splitext(source)[1].lower()
    if kind is None:
        kind = "table" if ext == ".csv" else "graph"
    if kind == "table":
        if ext != ".csv":
            raise ParseError("tables are read from .csv files")
        return LoadedInput(source, "table", parse_csv_table(text), raw)
    if ext == ".g6":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ParseError("empty graph6 file", 0)
        return LoadedInput(source, "graph", parse_graph6(lines[0].strip()), raw)
    if ext == ".csv":
        raise ParseError("a .csv file holds a table, not a graph")
    return LoadedInput(source, "graph", parse_edge_list(text), raw)


def _plain(obj):
    """Convert numpy containers and scalars to JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def _header(command, inp: LoadedInput, seed, args, **extra):
    rep = {
        "schema": SCHEMA,
        "command": command,
        "version": __version__,
        "seed": seed,
        "args": args,
        "input": inp.describe(**extra) if inp is not None else None,
    }
    return rep


def dumps(report) -> str:
    return json.dumps(_plain(report), indent=2, allow_nan=False) + "\n"


def save_outputs(out_dir, report, files):
    """Atomically write ``report.json`` and every SVG under ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    for name, text in files.items():
        write_atomic(os.path.join(out_dir, name), text)
    write_atomic(os.path.join(out_dir, "report.json"), dumps(report))


def fmt5(values):
    return ", ".join(f"{v:.5f}" for v in values)


def prepare_table(t: ContingencyTable):
    """Zero the diagonal of square tables (self-flows are not observed)."""
    if t.shape[0] == t.shape[1]:
        return ContingencyTable.directed(t.entries, None), "square table: diagonal set to zero"
    return t, "none"


def _table_with_labels(t, prepared):
    return ContingencyTable(prepared.entries, t.row_labels, t.col_labels)


def run_spectrum(inp: LoadedInput, top=None):
    if inp.kind == "graph":
        g = inp.data
        g.require_connected()
        values = laplacian_spectrum(normalize_total_weight(g)).values
        extra = {"n": g.n, "preprocessing": "none"}
        name = "eigenvalues"
    else:
        t, prep = prepare_table(inp.data)
        t.require_positive_margins()
        values = svd(normalized_table(t)).singulars
        extra = {"shape": list(t.shape), "preprocessing": prep}
        name = "singular_values"
    shown = values if top is None else values[:top]
    rep = _header("spectrum", inp, None, {"top": top}, **extra)
    rep[name] = shown
    rep["text"] = fmt5(shown)
    return rep, {}


def gap_table(values, trivial_first=True):
    """Relative gaps ``(s_j - s_{j+1}) / s_j`` among the first nontrivial values.

    ``values`` are singular values in nonincreasing order with the trivial
    leading 1 included.
    """
    s = np.asarray(values, dtype=np.float64)
    nontrivial = s[1:] if trivial_first else s
    m = min(GAP_WINDOW, nontrivial.size)
    if m < 3:
        raise PreconditionError(f"need at least 3 nontrivial values, got {nontrivial.size}")
    head = nontrivial[:m]
    if np.any(head <= 0):
        raise PreconditionError("values must be positive")
    return (head[:-1] - head[1:]) / head[:-1]


def select_k(values):
    """Cluster count ``1 + j`` at the largest relative gap after the ``j``-th nontrivial value.

    Ties go to the lowest ``j``.
    """
    gaps = gap_table(values)
    j = int(np.argmax(gaps)) + 1
    return j + 1, gaps


def laplacian_gap_table(eigenvalues):
    """Graph analogue: ``(lambda_{j+1} - lambda_j) / lambda_{j+1}`` for ``j = 1..``."""
    lam = np.asarray(eigenvalues, dtype=np.float64)[1:]
    m = min(GAP_WINDOW, lam.size)
    if m < 3:
        raise PreconditionError(f"need at least 3 nontrivial eigenvalues, got {lam.size}")
    head = lam[:m]
    return (head[1:] - head[:-1]) / head[1:]


def run_select_k(inp: LoadedInput = None, values=None):
    if values is not None:
        k, gaps = select_k(values)
        rep = _header("select-k", None, None, {"values": list(values)})
        rep["values"] = values
    elif inp.kind == "table":
        t, prep = prepare_table(inp.data)
        t.require_positive_margins()
        s = svd(normalized_table(t)).singulars
        k, gaps = select_k(s)
        rep = _header("select-k", inp, None, {}, shape=list(t.shape), preprocessing=prep)
        rep["singular_values"] = s
    else:
        g = inp.data
        g.require_connected()
        lam = laplacian_spectrum(normalize_total_weight(g)).values
        gaps = laplacian_gap_table(lam)
        k = int(np.argmax(gaps)) + 2
        rep = _header("select-k", inp, None, {}, n=g.n, preprocessing="none")
        rep["eigenvalues"] = lam
    rep["gap_table"] = [{"j": j + 1, "gap": float(v)} for j, v in enumerate(gaps)]
    rep["k"] = k
    rep["text"] = f"k = {k}"
    return rep, {}


def relabel_by_volume(labels, weights, k):
    """Renumber clusters by decreasing volume, ties by smallest member index."""
    labels = np.asarray(labels)
    vol = np.bincount(labels, weights=weights, minlength=k)
    first = np.array([np.flatnonzero(labels == c)[0] for c in range(k)])
    order = np.lexsort((first, -vol))
    new = np.empty(k, dtype=np.int64)
    new[order] = np.arange(k)
    return new[labels]


def _memberships(labels, names, k):
    return [
        {"cluster": c + 1, "members": [names[i] for i in np.flatnonzero(labels == c)]} for c in range(k)
    ]


def _axis_pairs(dim):
    axes = list(range(min(dim, 3)))
    if len(axes) == 1:
        return [(0, None)]
    return [(a, b) for i, a in enumerate(axes) for b in axes[i + 1 :]]


def _plane(points, a, b):
    if b is None:
        return np.column_stack([points[:, a], np.zeros(points.shape[0])])
    return points[:, [a, b]]


def run_ca(inp: LoadedInput, k=None, seed=0, restarts=16):
    if inp.kind != "table":
        raise PreconditionError("correspondence analysis needs a table")
    t0 = inp.data
    t, prep = prepare_table(t0)
    t = _table_with_labels(t0, t)
    t.require_non_degenerate()
    tn = t.normalized()
    sv = svd(normalized_table(tn))
    gaps = None
    if k is None:
        k, gaps = select_k(sv.singulars)
    if k < 2:
        raise PreconditionError("k must be at least 2")
    rows, cols = correspondence_representatives(t, k - 1, sv)
    if k > min(t.shape):
        raise PreconditionError(f"k={k} exceeds the table size {t.shape}")
    kr = weighted_kmeans(rows.points, rows.weights, k, seed=seed, restarts=restarts)
    kc = weighted_kmeans(cols.points, cols.weights, k, seed=seed, restarts=restarts)
    rl = relabel_by_volume(kr.partition.labels, rows.weights, k)
    cl = relabel_by_volume(kc.partition.labels, cols.weights, k)
    rnames = list(t.row_labels) if t.row_labels else [str(i) for i in range(t.shape[0])]
    cnames = list(t.col_labels) if t.col_labels else [str(j) for j in range(t.shape[1])]
    bp = BiPartition(rl, cl, k)
    phi2 = block_phi_square(tn, bp)
    flat = np.where(np.isnan(phi2), np.inf, phi2)
    a, b = np.unravel_index(int(np.argmin(flat)), phi2.shape)
    try:
        md = md_exact(tn, bp)
    except BlockTooLarge:
        md = md_sampled(tn, bp, samples=MD_SAMPLES, seed=seed)
    chi = chi_square(t, t.total)

    rep = _header("ca", inp, seed, {"k": k, "restarts": restarts}, shape=list(t.shape), preprocessing=prep)
    rep.update(
        {
            "k": k,
            "gap_table": None if gaps is None else [{"j": j + 1, "gap": float(v)} for j, v in enumerate(gaps)],
            "singular_values": sv.singulars,
            "row_variance": kr.variance,
            "col_variance": kc.variance,
            "row_clusters": _memberships(rl, rnames, k),
            "col_clusters": _memberships(cl, cnames, k),
            "densities": md.densities,
            "block_phi_square": phi2,
            "most_independent_block": {"row_cluster": int(a) + 1, "col_cluster": int(b) + 1, "phi_square": flat[a, b]},
            "discrepancy": {
                "md": md.md,
                "exact": md.exact,
                "witness": {
                    "row_cluster": md.witness[0] + 1,
                    "col_cluster": md.witness[1] + 1,
                    "rows": [rnames[i] for i in md.witness[2]],
                    "cols": [cnames[j] for j in md.witness[3]],
                },
                "sk": md.sk,
                "bound_rhs": md.bound_rhs,
                "bound_holds": md.bound_holds,
            },
            "chi_square": {"n": t.total, "from_singulars": chi.from_singulars, "direct": chi.direct},
        }
    )
    rorder = np.lexsort((np.arange(rl.size), rl))
    corder = np.lexsort((np.arange(cl.size), cl))
    files = {"heatmap.svg": heatmap_svg(t.entries, rorder, corder, title="table reordered by cluster")}
    for a_, b_ in _axis_pairs(k - 1):
        tag = f"{a_ + 1}" if b_ is None else f"{a_ + 1}_{b_ + 1}"
        files[f"rows_{tag}.svg"] = scatter_svg(_plane(rows.points, a_, b_), rl, names=rnames, title=f"row axes {tag}")
        files[f"cols_{tag}.svg"] = scatter_svg(_plane(cols.points, a_, b_), cl, names=cnames, title=f"column axes {tag}")
    rep["files"] = sorted(files)
    return rep, files


def _mask_tag(mask):
    return "".join("p" if s > 0 else "m" for s in mask)


def _project(points, view):
    # two fixed viewpoints for three-dimensional clouds
    if view == 0:
        rot = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    else:
        c, s = np.cos(np.pi / 4), np.sin(np.pi / 4)
        rot = np.array([[c, -s * 0.5], [s, c * 0.5], [0.0, np.sqrt(0.75)]])
    return points @ rot


def run_carpet(inp: LoadedInput, k=3, tol=1e-8, seed=0, restarts=16, density=None):
    if inp.kind != "graph":
        raise PreconditionError("the carpet command needs a graph")
    g = inp.data
    rep_g = theorem_bound_report(g, k, seed=seed, restarts=restarts, tol=tol)
    res = rep_g.carpet
    emb = vertex_representatives(g, k - 1)
    base = Carpet(emb)
    oriented = orient(base, res.orientation)

    rep = _header("carpet", inp, seed, {"k": k, "tol": tol, "restarts": restarts}, n=g.n, preprocessing="none")
    rep.update(
        {
            "k": k,
            "eigenvalues": rep_g.eigenvalues,
            "bound": rep_g.bound,
            "achieved": rep_g.achieved,
            "holds": rep_g.holds,
            "clusters": rep_g.clusters,
            "clamped": rep_g.clamped,
            "root": {
                "found": rep_g.root_found,
                "a_star": res.a_star,
                "residual": res.residual,
                "f_value": res.f_value,
                "orientation": list(res.orientation),
                "b_parts": res.b_parts,
                "b": res.b,
                "centers": res.centers,
                "sigma_sq": res.sigma_sq,
            },
            "chain_holds": rep_g.chain_holds,
            "center_variance": rep_g.center_variance,
            "center_partition_variance": rep_g.center_partition_variance,
            "kmeans_labels": rep_g.kmeans.partition.labels,
        }
    )
    files = {}
    labels = rep_g.kmeans.partition.labels
    pts = oriented.x
    if k - 1 == 1:
        files["embedding.svg"] = scatter_svg(
            _plane(pts, 0, None), labels, marks=[[res.a_star[0], 0.0]], title="embedding with root"
        )
    else:
        files["embedding.svg"] = scatter_svg(pts[:, :2], labels, marks=[res.a_star[:2]], title="embedding with root")
    if k - 1 in (2, 3):
        images = {}
        for mask in orientation_masks(k - 1):
            img = carpet_image(orient(base, mask), density)
            images[_mask_tag(mask)] = {"origin_inside": img.origin_inside()}
            if k - 1 == 2:
                curves = [np.column_stack([img.boundary_low[:, 0], img.boundary_low[:, 1]]),
                          np.column_stack([img.boundary_high[:, 0], img.boundary_high[:, 1]])]
                files[f"carpet_{_mask_tag(mask)}.svg"] = curves_svg(
                    curves, points=img.image, title=f"carpet image, orientation {_mask_tag(mask)}"
                )
            elif tuple(mask) == tuple(res.orientation):
                for view in (0, 1):
                    files[f"carpet_view{view + 1}.svg"] = scatter_svg(
                        _project(img.image, view), None, marks=[[0.0, 0.0]], title=f"carpet image, view {view + 1}"
                    )
        rep["orientation_images"] = images
    rep["files"] = sorted(files)
    return rep, files


def run_cluster(inp: LoadedInput, k=2, clusters=None, seed=0, restarts=16):
    if inp.kind != "graph":
        raise PreconditionError("the cluster command needs a graph")
    g = inp.data
    g.require_connected()
    gn = normalize_total_weight(g)
    es = laplacian_spectrum(gn)
    emb = vertex_representatives(gn, k - 1, es)
    if clusters is None:
        clusters = min(2 ** (k - 1), g.n)
    km = weighted_kmeans(emb.points, emb.weights, clusters, seed=seed, restarts=restarts)
    labels = relabel_by_volume(km.partition.labels, emb.weights, clusters)
    part = Partition.from_labels(labels, emb.weights, clusters)
    rep = _header("cluster", inp, seed, {"k": k, "clusters": clusters, "restarts": restarts}, n=g.n, preprocessing="none")
    rep.update(
        {
            "k": k,
            "clusters": clusters,
            "eigenvalues": es.values[1:k],
            "variance": km.variance,
            "normalized_cut": normalized_cut(gn, part),
            "memberships": _memberships(labels, [str(i) for i in range(g.n)], clusters),
        }
    )
    feasible = clusters == k and g.n <= CUT_BRUTE_FORCE_MAX_N and stirling2(g.n, k) <= MAX_PARTITIONS
    if feasible:
        cb = check_cut_lower_bound(gn, k)
        rep["cut_bound"] = {"lambda_sum": cb.lambda_sum, "fk": cb.fk, "holds": cb.holds}
    else:
        rep["cut_bound"] = None
    files = {"embedding.svg": scatter_svg(_plane(emb.points, 0, None if k == 2 else 1), labels, title="embedding")}
    rep["files"] = sorted(files)
    return rep, files
