import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiedler_carpet.errors import DuplicateLabel, NegativeEntry, ParseError, SelfLoop
from fiedler_carpet.formats import (
    encode_graph6,
    format_csv_table,
    parse_csv_table,
    parse_edge_list,
    parse_graph6,
)
from fiedler_carpet.graphs import WeightedGraph

from helpers import THREE_GROUP_G6, HFRJIOY, HFRJIOY_EDGES, random_graph


def test_graph6_small_cases():
    g = parse_graph6("A?")
    assert g.n == 2 and g.edges() == []
    g = parse_graph6("A_")
    assert g.n == 2 and g.edges() == [(0, 1)]
    assert parse_graph6(b">>graph6<<A_").edges() == [(0, 1)]


def test_graph6_hfrjioy():
    g = parse_graph6(HFRJIOY)
    assert g.n == 9
    assert sorted(g.edges()) == HFRJIOY_EDGES
    assert encode_graph6(g) == HFRJIOY


def test_graph6_three_group_string():
    g = parse_graph6(THREE_GROUP_G6)
    assert g.n == 29
    assert len(g.edges()) == 132
    assert g.is_connected()
    assert encode_graph6(g) == THREE_GROUP_G6
    # the doubled backslash of an escaped source does not decode
    with pytest.raises(ParseError):
        parse_graph6("\\" + THREE_GROUP_G6)


def test_graph6_errors_carry_offsets():
    with pytest.raises(ParseError) as e:
        parse_graph6("A\x20")
    assert e.value.offset == 1
    with pytest.raises(ParseError) as e:
        parse_graph6("C")
    assert "truncated" in str(e.value)
    with pytest.raises(ParseError) as e:
        parse_graph6("A__")
    assert e.value.offset == 2
    with pytest.raises(ParseError, match="padding"):
        parse_graph6("A`")
    with pytest.raises(ParseError):
        parse_graph6("~??")
    with pytest.raises(ParseError):
        parse_graph6("")


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 62), p=st.floats(0, 1))
def test_graph6_round_trip(seed, n, p):
    g = random_graph(np.random.default_rng(seed), n, p)
    s = encode_graph6(g)
    assert s[0] == chr(63 + n)
    h = parse_graph6(s)
    assert np.array_equal(h.weights, g.weights)
    assert encode_graph6(h) == s


def test_edge_list():
    g = parse_edge_list("0 1 1.0")
    assert g.n == 2 and g.weights[0, 1] == 1.0
    g = parse_edge_list("0 1 2\n0 1 3\n")
    assert g.weights[1, 0] == 5.0
    g = parse_edge_list("# comment\n0 2   # unit weight\n\n1 2 0.5\n", n=4)
    assert g.n == 4 and g.weights[0, 2] == 1.0 and g.weights[2, 1] == 0.5
    with pytest.raises(SelfLoop):
        parse_edge_list("0 0 1")
    assert parse_edge_list("0 0 0\n0 1 1").n == 2
    with pytest.raises(NegativeEntry) as e:
        parse_edge_list("0 1 1\n1 2 -3")
    assert e.value.offset == 2
    with pytest.raises(ParseError):
        parse_edge_list("0 1 x")
    with pytest.raises(ParseError):
        parse_edge_list("0 1 2 3")


def test_csv_table():
    t = parse_csv_table(",a,b\nx,1,0\ny,0,1\n")
    assert t.row_labels == ("x", "y") and t.col_labels == ("a", "b")
    np.testing.assert_array_equal(t.row_sums, [1, 1])
    np.testing.assert_array_equal(t.col_sums, [1, 1])
    t = parse_csv_table(",a,b,c\nr,2,3,5\n")
    np.testing.assert_array_equal(t.row_sums, [10])
    np.testing.assert_array_equal(t.col_sums, [2, 3, 5])
    # the diagonal is kept as read
    t = parse_csv_table(',"p, q",r\n"p, q",4,1\nr,1,4\n')
    assert t.entries[0, 0] == 4 and t.col_labels[0] == "p, q"
    with pytest.raises(NegativeEntry):
        parse_csv_table(",a\nx,-1\n")
    with pytest.raises(DuplicateLabel):
        parse_csv_table(",a,a\nx,1,2\n")
    with pytest.raises(DuplicateLabel):
        parse_csv_table(",a\nx,1\nx,2\n")
    with pytest.raises(ParseError) as e:
        parse_csv_table(",a,b\nx,1\n")
    assert e.value.offset == 2


def test_csv_round_trip():
    text = ",a,b\nx,1.5,0.0\ny,0.25,3.0\n"
    t = parse_csv_table(text)
    assert format_csv_table(t) == text
    assert np.array_equal(parse_csv_table(format_csv_table(t)).entries, t.entries)


def test_encode_rejects_large_graphs():
    with pytest.raises(ParseError):
        encode_graph6(WeightedGraph(np.zeros((63, 63))))
