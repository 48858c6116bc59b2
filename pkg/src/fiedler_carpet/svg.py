"""Deterministic SVG output for scatter plots, curve sets and heatmaps.

Coordinates are written with a fixed number of decimals, so equal inputs
give byte-identical files.
"""

from __future__ import annotations

import os
import tempfile
from xml.sax.saxutils import escape

import numpy as np

CANVAS = 800
MARGIN = 0.05
PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)


def _num(v):
    s = f"{v:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _bounds(arrays):
    pts = [np.asarray(a, dtype=np.float64).reshape(-1, 2) for a in arrays]
    pts = [p for p in pts if p.size]
    if not pts:
        return -1.0, 1.0, -1.0, 1.0
    allp = np.vstack(pts)
    x0, y0 = allp.min(axis=0)
    x1, y1 = allp.max(axis=0)
    # degenerate spans get a unit window
    if x1 - x0 <= 0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 <= 0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    mx, my = MARGIN * (x1 - x0), MARGIN * (y1 - y0)
    return x0 - mx, x1 + mx, y0 - my, y1 + my


def _open(x0, x1, y0, y1, title):
    # y is flipped so larger values are drawn higher
    vb = f"{_num(x0)} {_num(-y1)} {_num(x1 - x0)} {_num(y1 - y0)}"
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" '
        f'viewBox="{vb}" preserveAspectRatio="none">',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    return out


def _axes(x0, x1, y0, y1):
    stroke = _num(0.002 * max(x1 - x0, y1 - y0))
    out = [f'<g stroke="#000000" stroke-width="{stroke}" fill="none">']
    out.append(f'<rect x="{_num(x0)}" y="{_num(-y1)}" width="{_num(x1 - x0)}" height="{_num(y1 - y0)}"/>')
    if x0 < 0 < x1:
        out.append(f'<line x1="0" y1="{_num(-y1)}" x2="0" y2="{_num(-y0)}"/>')
    if y0 < 0 < y1:
        out.append(f'<line x1="{_num(x0)}" y1="0" x2="{_num(x1)}" y2="0"/>')
    out.append("</g>")
    return out


def color(label):
    return PALETTE[int(label) % len(PALETTE)]


def scatter_svg(points, labels=None, marks=None, title=None, names=None) -> str:
    """Points colored by cluster label; ``marks`` are drawn as distinguished crosses."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    marks = np.zeros((0, 2)) if marks is None else np.asarray(marks, dtype=np.float64).reshape(-1, 2)
    x0, x1, y0, y1 = _bounds([pts, marks])
    out = _open(x0, x1, y0, y1, title)
    out += _axes(x0, x1, y0, y1)
    r = _num(0.008 * max(x1 - x0, y1 - y0))
    for i, (x, y) in enumerate(pts):
        lab = 0 if labels is None else labels[i]
        tip = f"<title>{escape(str(names[i]))}</title>" if names is not None else ""
        out.append(f'<circle cx="{_num(x)}" cy="{_num(-y)}" r="{r}" fill="{color(lab)}">{tip}</circle>')
    h = 0.02 * max(x1 - x0, y1 - y0)
    sw = _num(0.004 * max(x1 - x0, y1 - y0))
    for x, y in marks:
        out.append(
            f'<path d="M{_num(x - h)} {_num(-y - h)}L{_num(x + h)} {_num(-y + h)}'
            f'M{_num(x - h)} {_num(-y + h)}L{_num(x + h)} {_num(-y - h)}" '
            f'stroke="#000000" stroke-width="{sw}"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def curves_svg(curves, labels=None, points=None, title=None) -> str:
    """Polylines (each an ``(p, 2)`` array) plus an optional point cloud."""
    curves = [np.asarray(c, dtype=np.float64).reshape(-1, 2) for c in curves]
    pts = np.zeros((0, 2)) if points is None else np.asarray(points, dtype=np.float64).reshape(-1, 2)
    x0, x1, y0, y1 = _bounds(curves + [pts])
    out = _open(x0, x1, y0, y1, title)
    out += _axes(x0, x1, y0, y1)
    r = _num(0.003 * max(x1 - x0, y1 - y0))
    for x, y in pts:
        out.append(f'<circle cx="{_num(x)}" cy="{_num(-y)}" r="{r}" fill="#7f7f7f"/>')
    sw = _num(0.003 * max(x1 - x0, y1 - y0))
    for i, c in enumerate(curves):
        if len(c) == 0:
            continue
        path = " ".join(f"{_num(x)},{_num(-y)}" for x, y in c)
        lab = i if labels is None else labels[i]
        out.append(f'<polyline points="{path}" fill="none" stroke="{color(lab)}" stroke-width="{sw}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def gray_levels(matrix):
    """0 (black) .. 255 (white) per cell on a log(1 + x) scale; larger is darker."""
    m = np.log1p(np.asarray(matrix, dtype=np.float64))
    top = m.max() if m.size else 0.0
    if top <= 0:
        return np.full(m.shape, 255, dtype=np.int64)
    return np.rint(255 * (1 - m / top)).astype(np.int64)


def heatmap_svg(matrix, row_order=None, col_order=None, title=None) -> str:
    """Grayscale heatmap of a nonnegative matrix with optional row and column reordering."""
    m = np.asarray(matrix, dtype=np.float64)
    if row_order is not None:
        m = m[np.asarray(row_order)]
    if col_order is not None:
        m = m[:, np.asarray(col_order)]
    rows, cols = m.shape
    levels = gray_levels(m)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" '
        f'viewBox="0 0 {max(cols, 1)} {max(rows, 1)}" preserveAspectRatio="none" shape-rendering="crispEdges">',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    for i in range(rows):
        for j in range(cols):
            g = f"{levels[i, j]:02x}"
            out.append(f'<rect x="{j}" y="{i}" width="1" height="1" fill="#{g}{g}{g}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_atomic(path, text: str):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
