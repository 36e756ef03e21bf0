"""Temporal graph construction, parsing, and neighbor queries."""

import io

import numpy as np
import pytest

from dnim import EdgeListError, TemporalGraph, parse_edge_list


def test_from_edges_sorted_stable():
    g = TemporalGraph.from_edges(4, [(0, 1, 30), (1, 2, 10), (2, 3, 30), (3, 0, 20)])
    assert g.n_edges == 4
    assert list(g.ts) == [10, 20, 30, 30]
    # the two t=30 edges keep their input order
    assert list(zip(g.src, g.dst)) == [(1, 2), (3, 0), (0, 1), (2, 3)]
    assert g.t_start == 10 and g.t_end == 30


def test_bounds_default_and_override():
    g = TemporalGraph.from_edges(2, [(0, 1, 5), (1, 0, 9)])
    assert (g.t_start, g.t_end) == (5, 9)
    g2 = TemporalGraph.from_edges(2, [(0, 1, 5), (1, 0, 9)], t_start=0, t_end=100)
    assert (g2.t_start, g2.t_end) == (0, 100)


def test_immutable_arrays():
    g = TemporalGraph.from_edges(2, [(0, 1, 5)])
    with pytest.raises(ValueError):
        g.src[0] = 1


def test_parse_single_line_with_weight():
    g = parse_edge_list(io.StringIO("0,1,5,100\n"), has_weight_column=True)
    assert g.n_nodes == 2
    assert g.n_edges == 1
    assert (g.src[0], g.dst[0], g.ts[0]) == (0, 1, 100)


def test_parse_loop_dropped():
    g = parse_edge_list(io.StringIO("2,2,50\n"), drop_loops=True)
    assert g.n_edges == 0
    # the lone id still registers as a node so ids stay dense
    assert g.n_nodes == 1


def test_parse_whitespace_delimited_and_comments():
    text = "# header\n1 2 10\n\n3 1 5\n% trailer\n"
    g = parse_edge_list(io.StringIO(text))
    assert g.n_edges == 2
    assert list(g.ts) == [5, 10]


def test_parse_dense_remap_and_original_ids():
    # original ids appear as 7 (src at t=3), then 9, then 7->5
    g = parse_edge_list(io.StringIO("9,7,10\n7,5,20\n9,5,3\n"))
    assert g.n_nodes == 3
    # first appearance order scans the time-sorted stream: (9,5,3),(9,7,10),(7,5,20)
    assert list(g.orig_ids) == [9, 5, 7]
    assert g.to_original([0, 1, 2]) == [9, 5, 7]
    assert g.from_original([9, 5, 7]) == [0, 1, 2]


def test_parse_malformed_line_reports_number():
    with pytest.raises(EdgeListError) as exc:
        parse_edge_list(io.StringIO("0,1,10\n0,oops,20\n"))
    assert exc.value.line_no == 2


def test_parse_empty_input_rejected():
    with pytest.raises(EdgeListError):
        parse_edge_list(io.StringIO(""))
    with pytest.raises(EdgeListError):
        parse_edge_list(io.StringIO("# only comments\n"))


def test_parse_dedup():
    text = "0,1,10\n0,1,10\n0,1,20\n"
    g = parse_edge_list(io.StringIO(text), dedup=True)
    assert g.n_edges == 2
    g2 = parse_edge_list(io.StringIO(text))
    assert g2.n_edges == 3


def test_temporal_neighbors_isolated():
    g = TemporalGraph.from_edges(3, [(0, 1, 10)])
    nodes, times = g.temporal_neighbors(2)
    assert len(nodes) == 0 and len(times) == 0


def test_temporal_neighbors_undirected_sorted():
    # edges (A,B,10), (C,A,20) -> neighbors(A) = [(B,10), (C,20)]
    g = TemporalGraph.from_edges(3, [(0, 1, 10), (2, 0, 20)])
    nodes, times = g.temporal_neighbors(0)
    assert list(zip(nodes, times)) == [(1, 10), (2, 20)]


def test_temporal_neighbors_per_edge_entries():
    # edges (A,B,10), (A,B,15) -> neighbors(A) = [(B,10), (B,15)]
    g = TemporalGraph.from_edges(2, [(0, 1, 10), (0, 1, 15)])
    nodes, times = g.temporal_neighbors(0)
    assert list(zip(nodes, times)) == [(1, 10), (1, 15)]
    nodes_b, times_b = g.temporal_neighbors(1)
    assert list(zip(nodes_b, times_b)) == [(0, 10), (0, 15)]


def test_temporal_neighbors_out_of_range():
    g = TemporalGraph.from_edges(2, [(0, 1, 10)])
    with pytest.raises(IndexError):
        g.temporal_neighbors(2)
    with pytest.raises(IndexError):
        g.temporal_neighbors(-1)


def test_out_degrees():
    g = TemporalGraph.from_edges(3, [(0, 1, 10), (0, 2, 20), (1, 0, 30)])
    assert list(g.out_degrees()) == [2, 1, 0]


def test_round_trip_write_parse():
    rng = np.random.Generator(np.random.PCG64(5))
    edges = [
        (int(rng.integers(0, 6)), int(rng.integers(0, 6)), int(rng.integers(0, 50)))
        for _ in range(20)
    ]
    g = parse_edge_list(
        io.StringIO("".join(f"{s},{d},{t}\n" for s, d, t in edges))
    )
    buf = io.StringIO()
    g.write_edge_list(buf)
    g2 = parse_edge_list(io.StringIO(buf.getvalue()))
    assert g2.n_nodes == g.n_nodes
    assert list(g2.orig_ids) == list(g.orig_ids)
    pairs = sorted(zip(g.src, g.dst, g.ts))
    pairs2 = sorted(zip(g2.src, g2.dst, g2.ts))
    assert pairs == pairs2


def test_cache_round_trip(tmp_path):
    g = parse_edge_list(io.StringIO("9,7,10\n7,5,20\n"), t_start=0, t_end=50)
    path = tmp_path / "graph.npz"
    g.save_cache(path)
    g2 = TemporalGraph.load_cache(path)
    assert g2.n_nodes == g.n_nodes
    assert list(g2.src) == list(g.src)
    assert list(g2.dst) == list(g.dst)
    assert list(g2.ts) == list(g.ts)
    assert (g2.t_start, g2.t_end) == (0, 50)
    assert list(g2.orig_ids) == list(g.orig_ids)


def test_float_timestamps_floored():
    g = parse_edge_list(io.StringIO("0,1,10.9\n1,0,3.2\n"))
    assert list(g.ts) == [3, 10]


def test_duration():
    g = TemporalGraph.from_edges(2, [(0, 1, 5), (1, 0, 9)], t_start=0, t_end=100)
    assert g.duration == 100
