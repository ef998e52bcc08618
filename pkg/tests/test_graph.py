import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from msreach.graph import (
    DiGraph,
    EdgeListError,
    SourceSet,
    bounded_hop_reach,
    gen_random,
    load_edge_list,
    load_sources,
    multi_source_reach,
    parse_reach_result,
    scc_condense,
    topological_rank,
)
from conftest import path_graph, random_sources, reach_dense


def small_graphs():
    return st.integers(1, 14).flatmap(
        lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)),
                                                 max_size=40)))


def test_load_path():
    g = load_edge_list("3 2\n0 1\n1 2")
    assert (g.n, g.m) == (3, 2)
    assert g.edges().tolist() == [[0, 1], [1, 2]]


def test_load_dedups():
    g = load_edge_list(io.StringIO("2 2\n0 1\n0 1\n"))
    assert g.m == 1


@pytest.mark.parametrize("text, msg", [
    ("2 1\n0 5", "vertex id out of range at line 2"),
    ("", "empty input at line 1"),
    ("3 1\n0 x", "malformed line at line 2"),
    ("3\n", "malformed header at line 1"),
    ("3 2\n0 1\n", "expected 2 edges"),
])
def test_load_errors(text, msg):
    with pytest.raises(EdgeListError, match=msg):
        load_edge_list(text)


def test_load_skips_comments_and_blanks():
    g = load_edge_list("# header\n3 1\n\n# edge\n2 0\n")
    assert g.edges().tolist() == [[2, 0]]


def test_sources_file():
    s = load_sources("3\n0\n\n2\n", 4)
    assert s.ids == (3, 0, 2)
    with pytest.raises(EdgeListError, match="line 1"):
        load_sources("9\n", 4)
    with pytest.raises(EdgeListError, match="duplicate"):
        load_sources("1\n1\n", 4)


def test_text_roundtrip():
    g = gen_random(30, 1.4, 2)
    h = load_edge_list(g.to_text())
    assert np.array_equal(g.edges(), h.edges())


def test_gen_infeasible():
    with pytest.raises(ValueError, match="density infeasible"):
        gen_random(100, 2.0, 7)


def test_gen_counts_and_determinism():
    a = gen_random(100, 1.5, 7)
    b = gen_random(100, 1.5, 7)
    assert a.m == 1000
    assert np.array_equal(a.edges(), b.edges())
    e = a.edges()
    assert not np.any(e[:, 0] == e[:, 1])
    assert not np.array_equal(a.edges(), gen_random(100, 1.5, 8).edges())


def test_gen_dag_is_acyclic():
    g = gen_random(50, 1.2, 1, dag=True)
    assert g.m == round(50 ** 1.2)
    assert scc_condense(g).dag.n == 50


def test_gen_complete_dag():
    # every unordered pair once: exercises the pair unranking at its extremes
    for n in (3, 7, 20):
        mu = np.log(n * (n - 1) / 2) / np.log(n)
        g = gen_random(n, mu, 0, dag=True)
        assert g.m == n * (n - 1) // 2
        assert scc_condense(g).dag.n == n


def test_scc_cycle():
    c = scc_condense(DiGraph.from_edges(3, [(0, 1), (1, 2), (2, 0)]))
    assert c.dag.n == 1 and c.dag.m == 0


def test_scc_path_identity():
    c = scc_condense(path_graph(3))
    assert c.dag.n == 3 and c.dag.m == 2
    assert c.scc_id.tolist() == [0, 1, 2]


def test_scc_two_cycles():
    g = DiGraph.from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2), (1, 2)])
    c = scc_condense(g)
    assert c.dag.n == 2 and c.dag.m == 1
    r = reach_dense(g, range(4))
    for u in range(4):
        for v in range(4):
            assert (c.scc_id[u] == c.scc_id[v]) == (r[u, v] and r[v, u])


@pytest.mark.parametrize("seed", range(6))
def test_condensation_preserves_reachability(seed):
    g = gen_random(80, 1.25, seed)
    c = scc_condense(g)
    full = reach_dense(g, range(g.n))
    comp = reach_dense(c.dag, range(c.dag.n))
    assert np.array_equal(full, comp[np.ix_(c.scc_id, c.scc_id)])
    for u, v in c.dag.edges().tolist():
        assert u < v  # ids are topological ranks


def test_topological_rank_orders_edges_across_components():
    g = gen_random(60, 1.3, 4)
    rank, scc = topological_rank(g), scc_condense(g).scc_id
    for u, v in g.edges().tolist():
        if scc[u] != scc[v]:
            assert rank[u] < rank[v]


def test_reach_path():
    g = path_graph(3)
    assert multi_source_reach(g, SourceSet((0,))).reachable(0).tolist() == [0, 1, 2]
    assert multi_source_reach(g, SourceSet((2,))).reachable(0).tolist() == [2]
    assert bounded_hop_reach(g, SourceSet((0,)), 1).reachable(0).tolist() == [0, 1]


def test_zero_hops_is_sources():
    g = gen_random(30, 1.5, 3)
    r = bounded_hop_reach(g, SourceSet((4, 9)), 0)
    assert r.reachable(0).tolist() == [4] and r.reachable(1).tolist() == [9]


def test_bounded_matches_iterated_expansion(rng):
    g = gen_random(40, 1.3, 5, dag=True)
    s = random_sources(rng, 40, 7)
    frontier = np.zeros((7, 40), dtype=bool)
    frontier[np.arange(7), list(s.ids)] = True
    adj = np.zeros((40, 40), dtype=bool)
    e = g.edges()
    adj[e[:, 0], e[:, 1]] = True
    for _ in range(3):
        frontier = frontier | (frontier.astype(int) @ adj.astype(int) > 0)
    assert np.array_equal(bounded_hop_reach(g, s, 3).rows.to_bool(), frontier)


@settings(max_examples=80, deadline=None)
@given(small_graphs(), st.integers(0, 6))
def test_reach_matches_deque_bfs(data, d):
    n, edges = data
    g = DiGraph.from_edges(n, edges)
    s = SourceSet(tuple(range(n)))
    assert np.array_equal(multi_source_reach(g, s).rows.to_bool(), reach_dense(g, s.ids))
    assert np.array_equal(bounded_hop_reach(g, s, d).rows.to_bool(), reach_dense(g, s.ids, d))
    # hop exhaustion and monotonicity in d
    assert bounded_hop_reach(g, s, max(n - 1, 0)) == multi_source_reach(g, s)
    lo = bounded_hop_reach(g, s, d).rows.to_bool()
    hi = bounded_hop_reach(g, s, d + 1).rows.to_bool()
    assert not np.any(lo & ~hi)


def test_self_loops_are_inert():
    g = DiGraph.from_edges(3, [(0, 0), (0, 1)])
    assert g.m == 2
    assert multi_source_reach(g, SourceSet((0,))).reachable(0).tolist() == [0, 1]


def test_thread_count_independent(rng):
    g = gen_random(150, 1.3, 9)
    s = random_sources(rng, 150, 20)
    assert multi_source_reach(g, s, threads=1) == multi_source_reach(g, s, threads=4)
    assert bounded_hop_reach(g, s, 3, threads=1) == bounded_hop_reach(g, s, 3, threads=3)


def test_source_set_validation():
    with pytest.raises(ValueError):
        SourceSet((1, 1))
    with pytest.raises(ValueError):
        SourceSet((5,)).check(3)
    assert SourceSet((0,)).sigma(100) == 0.0
    assert SourceSet(tuple(range(10))).sigma(100) == pytest.approx(0.5)


@pytest.mark.parametrize("hex_rows", [False, True])
def test_result_text_roundtrip(hex_rows, rng):
    g = gen_random(70, 1.3, 2)
    s = random_sources(rng, 70, 5)
    r = multi_source_reach(g, s)
    assert parse_reach_result(r.to_text(hex_rows=hex_rows), 70) == r


def test_result_hex_bit_order():
    g = path_graph(5)
    r = multi_source_reach(g, SourceSet((3,)))
    assert r.to_text(hex_rows=True) == "3: 0x18\n"
