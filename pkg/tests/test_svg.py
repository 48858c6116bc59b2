import xml.etree.ElementTree as ET

import numpy as np

from fiedler_carpet.svg import curves_svg, gray_levels, heatmap_svg, scatter_svg, write_atomic

NS = "{http://www.w3.org/2000/svg}"


def test_empty_scatter_is_valid_svg():
    root = ET.fromstring(scatter_svg(np.zeros((0, 2))).split("\n", 1)[1])
    assert root.tag == NS + "svg"
    assert not root.findall(NS + "circle")


def test_scatter_contents():
    pts = np.array([[0.0, 0.0], [1.0, 2.0], [-1.0, 0.5]])
    text = scatter_svg(pts, [0, 1, 1], marks=[[0.5, 0.5]], title="a & b", names=["x", "y", "z"])
    root = ET.fromstring(text.split("\n", 1)[1])
    circles = root.findall(NS + "circle")
    assert len(circles) == 3
    assert circles[1].get("fill") == circles[2].get("fill") != circles[0].get("fill")
    # y is drawn flipped
    assert circles[1].get("cy") == "-2"
    assert root.find(NS + "title").text == "a & b"
    assert len(root.findall(NS + "path")) == 1


def test_heatmap_levels():
    root = ET.fromstring(heatmap_svg([[0.0, 1.0], [1.0, 0.0]]).split("\n", 1)[1])
    fills = [r.get("fill") for r in root.findall(NS + "rect")]
    assert fills == ["#ffffff", "#000000", "#000000", "#ffffff"]
    assert gray_levels(np.zeros((2, 2))).tolist() == [[255, 255], [255, 255]]
    # reordering moves cells, not levels
    swapped = heatmap_svg([[0.0, 1.0], [1.0, 0.0]], row_order=[1, 0])
    root = ET.fromstring(swapped.split("\n", 1)[1])
    assert [r.get("fill") for r in root.findall(NS + "rect")] == ["#000000", "#ffffff", "#ffffff", "#000000"]


def test_byte_identical():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(30, 2))
    assert scatter_svg(pts, np.arange(30) % 3) == scatter_svg(pts.copy(), np.arange(30) % 3)
    curves = [rng.normal(size=(10, 2)), rng.normal(size=(5, 2))]
    assert curves_svg(curves, points=pts) == curves_svg([c.copy() for c in curves], points=pts)
    m = rng.random((4, 5))
    assert heatmap_svg(m) == heatmap_svg(m.copy())
    # signed zero prints once
    assert scatter_svg([[-0.0, 0.0]]) == scatter_svg([[0.0, -0.0]])


def test_write_atomic(tmp_path):
    path = tmp_path / "sub" / "plot.svg"
    write_atomic(path, "first\n")
    write_atomic(path, "second\n")
    assert path.read_text() == "second\n"
    assert sorted(p.name for p in path.parent.iterdir()) == ["plot.svg"]
