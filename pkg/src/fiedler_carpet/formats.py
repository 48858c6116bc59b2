"""Readers and writers for graph6, whitespace edge lists and labelled CSV tables."""

from __future__ import annotations

import csv
import io
import math

import numpy as np

from .errors import DuplicateLabel, NegativeEntry, ParseError, SelfLoop
from .graphs import ContingencyTable, WeightedGraph

GRAPH6_MAX_N = 62
_HEADER = ">>graph6<<"


def _graph6_bit_pairs(n):
    # column order: x(0,1), x(0,2), x(1,2), x(0,3), ...
    for j in range(1, n):
        for i in range(j):
            yield i, j


def parse_graph6(text) -> WeightedGraph:
    """Decode one graph6 line into a unit-weight simple graph.

    Only the one-byte size header is supported, i.e. ``n <= 62``.
    """
    if isinstance(text, str):
        try:
            data = text.encode("ascii")
        except UnicodeEncodeError as exc:
            raise ParseError("graph6 text is not ASCII", exc.start) from None
    else:
        data = bytes(text)
    data = data.rstrip(b"\r\n")
    start = 0
    if data.startswith(_HEADER.encode()):
        start = len(_HEADER)
    if len(data) <= start:
        raise ParseError("empty graph6 string", start)
    for pos in range(start, len(data)):
        if not 63 <= data[pos] <= 126:
            raise ParseError(f"byte {data[pos]} outside graph6 range [63, 126]", pos)
    if data[start] == 126:
        raise ParseError("graph6 sizes above 62 vertices are not supported", start)
    n = data[start] - 63
    nbits = n * (n - 1) // 2
    nbytes = (nbits + 5) // 6
    body = data[start + 1 :]
    if len(body) < nbytes:
        raise ParseError(f"truncated graph6 bit stream: need {nbytes} bytes, got {len(body)}", len(data))
    if len(body) > nbytes:
        raise ParseError(f"trailing bytes after graph6 bit stream", start + 1 + nbytes)

    bits = []
    for byte in body:
        v = byte - 63
        bits.extend((v >> shift) & 1 for shift in range(5, -1, -1))
    if any(bits[nbits:]):
        raise ParseError("nonzero graph6 padding bits", len(data) - 1)

    w = np.zeros((n, n))
    for bit, (i, j) in zip(bits, _graph6_bit_pairs(n)):
        if bit:
            w[i, j] = w[j, i] = 1.0
    return WeightedGraph(w)


def encode_graph6(g: WeightedGraph) -> str:
    """Inverse of :func:`parse_graph6`; any positive weight counts as an edge."""
    n = g.n
    if n > GRAPH6_MAX_N:
        raise ParseError(f"graph6 encoding limited to {GRAPH6_MAX_N} vertices, got {n}")
    bits = [1 if g.weights[i, j] > 0 else 0 for i, j in _graph6_bit_pairs(n)]
    bits.extend([0] * (-len(bits) % 6))
    out = [chr(63 + n)]
    for k in range(0, len(bits), 6):
        v = 0
        for b in bits[k : k + 6]:
            v = (v << 1) | b
        out.append(chr(63 + v))
    return "".join(out)


def parse_edge_list(text: str, n=None) -> WeightedGraph:
    """Parse ``i j w`` lines (0-based, ``#`` comments); duplicates are summed.

    A line with only ``i j`` gets unit weight. ``n`` defaults to the largest
    index plus one.
    """
    triples = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"expected 'i j w', got {raw!r}", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ParseError(f"malformed edge line {raw!r}", lineno) from None
        if i < 0 or j < 0:
            raise ParseError("negative vertex index", lineno)
        if not math.isfinite(w):
            raise ParseError("non-finite weight", lineno)
        if w < 0:
            raise NegativeEntry(f"negative weight {w}", lineno)
        if i == j:
            if w > 0:
                raise SelfLoop(f"self-loop at vertex {i}", lineno)
            continue
        triples.append((i, j, w))
    size = max((max(i, j) for i, j, _ in triples), default=-1) + 1
    if n is None:
        n = size
    elif n < size:
        raise ParseError(f"vertex index {size - 1} exceeds n={n}")
    mat = np.zeros((n, n))
    for i, j, w in triples:
        mat[i, j] += w
        mat[j, i] += w
    return WeightedGraph(mat)


def parse_csv_table(text: str) -> ContingencyTable:
    """Read a table whose first row holds column labels and first column row labels."""
    rows = [r for r in csv.reader(io.StringIO(text)) if any(cell.strip() for cell in r)]
    if len(rows) < 2:
        raise ParseError("CSV table needs a header row and at least one data row", 1)
    col_labels = [c.strip() for c in rows[0][1:]]
    if not col_labels:
        raise ParseError("CSV header has no column labels", 1)
    _check_unique(col_labels, 1)
    row_labels, body = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(col_labels) + 1:
            raise ParseError(f"ragged row: {len(row) - 1} cells, expected {len(col_labels)}", lineno)
        row_labels.append(row[0].strip())
        values = []
        for cell in row[1:]:
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric cell {cell!r}", lineno) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite cell {cell!r}", lineno)
            if v < 0:
                raise NegativeEntry(f"negative cell {cell!r}", lineno)
            values.append(v)
        body.append(values)
    _check_unique(row_labels, None)
    return ContingencyTable(np.array(body), row_labels, col_labels)


def _check_unique(labels, lineno):
    seen = set()
    for lab in labels:
        if lab in seen:
            raise DuplicateLabel(f"duplicate label {lab!r}", lineno)
        seen.add(lab)


def format_csv_table(t: ContingencyTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    cols = t.col_labels or [str(j) for j in range(t.shape[1])]
    rows = t.row_labels or [str(i) for i in range(t.shape[0])]
    writer.writerow([""] + list(cols))
    for lab, vals in zip(rows, t.entries):
        writer.writerow([lab] + [repr(float(v)) for v in vals])
    return buf.getvalue()
