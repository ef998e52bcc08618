import math

import numpy as np
import pytest

from msreach.direach import (
    SolveConfig,
    choose_delta_dense,
    choose_delta_sparse,
    direach,
    realize_d,
    run_products,
    solve,
)
from msreach.graph import DiGraph, SourceSet, gen_random, multi_source_reach
from msreach.shortcut import SamplingParams, ShortcutSet
from conftest import path_graph, random_sources, reach_dense


@pytest.mark.parametrize("sigma, want", [
    (0.4, 1 - 2.009541 / 3),
    (0.321334, 1 / 3),
    (1.0, 1 - 2.371552 / 3),
])
def test_delta_dense(sigma, want):
    assert choose_delta_dense(sigma) == pytest.approx(want, abs=1e-12)


def test_delta_dense_reference_values():
    assert round(choose_delta_dense(0.4), 6) == 0.330153
    assert round(choose_delta_dense(1.0), 6) == 0.209483


@pytest.mark.parametrize("sigma, mu, want", [(0.5, 1.9, 0.285669), (0.6, 1.75, 0.219123)])
def test_delta_sparse(sigma, mu, want):
    assert choose_delta_sparse(sigma, mu) == pytest.approx(want, abs=5e-7)


def test_sparse_at_mu2_is_dense():
    for s in np.linspace(0, 1, 21):
        assert choose_delta_sparse(s, 2.0) == pytest.approx(choose_delta_dense(s))


def test_delta_is_clamped():
    # very sparse and wide: (1 + 1 - 2.37)/3 < 0
    assert 0 < choose_delta_sparse(1.0, 1.0) <= 0.5


def test_realize_d():
    assert realize_d(100, 0.5) == 10
    assert realize_d(100, 1e-12) == 1


def test_hand_instance_with_injected_shortcut():
    g = path_graph(4)
    res = direach(g, SourceSet((0,)), 2, shortcut=ShortcutSet(((0, 2),), 2))
    assert res.reachable(0).tolist() == [0, 1, 2, 3]


def test_empty_shortcut_and_full_budget_is_exact(rng):
    g = gen_random(50, 1.3, 3)
    s = random_sources(rng, 50, 6)
    assert direach(g, s, 49, shortcut=()) == multi_source_reach(g, s)


def test_d1_is_one_hop_including_self():
    g = path_graph(5)
    res = run_products(g, SourceSet((1, 4)), 1)
    assert res.reachable(0).tolist() == [1, 2]
    assert res.reachable(1).tolist() == [4]


@pytest.mark.parametrize("seed", range(12))
def test_sweep_against_bfs(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 121))
    sigma = (0.3, 0.5, 0.7)[seed % 3]
    g = gen_random(n, 1.2 + 0.1 * (seed % 4), seed, dag=bool(seed % 2))
    s = random_sources(rng, n, max(1, round(n ** sigma)))
    d = realize_d(n, choose_delta_dense(sigma))
    res = direach(g, s, d, params=SamplingParams(seed=seed))
    assert np.array_equal(res.rows.to_bool(), reach_dense(g, s.ids))


def test_config_validation():
    with pytest.raises(ValueError, match="unknown algorithm"):
        SolveConfig(algorithm="magic")
    with pytest.raises(ValueError):
        SolveConfig(delta_override=0.7)
    with pytest.raises(ValueError):
        SolveConfig(k=9)


def test_solve_tc_on_cycle():
    g = DiGraph.from_edges(3, [(0, 1), (1, 2), (2, 0)])
    res, stats = solve(g, SourceSet((0,)), SolveConfig("tc"))
    assert res.reachable(0).tolist() == [0, 1, 2]
    assert stats.algorithm == "tc"


def test_solve_delta_override_plumbed():
    g = gen_random(100, 1.3, 2)
    _, stats = solve(g, SourceSet((0, 1, 2)), SolveConfig("direach", delta_override=0.5))
    assert stats.d == 10 and stats.delta == 0.5
    assert "D=10" in stats.line()


def test_all_algorithms_agree(rng):
    g = gen_random(120, 1.4, 5, dag=False)
    s = random_sources(rng, 120, 11)
    ref, _ = solve(g, s, SolveConfig("naive"))
    for cfg in (SolveConfig("tc"), SolveConfig("direach", mu_hint=1.4), SolveConfig("recur", k=1)):
        res, stats = solve(g, s, cfg)
        assert res == ref
        assert stats.seconds >= 0


def test_solve_deterministic(rng):
    g = gen_random(90, 1.5, 5)
    s = random_sources(rng, 90, 9)
    cfg = SolveConfig("direach", sampling=SamplingParams(seed=4))
    a, sa = solve(g, s, cfg)
    b, sb = solve(g, s, cfg)
    assert a == b and sa.shortcut_edges == sb.shortcut_edges


def test_threads_independent(rng):
    g = gen_random(150, 1.3, 1)
    s = random_sources(rng, 150, 20)
    a, _ = solve(g, s, SolveConfig("direach", threads=1))
    b, _ = solve(g, s, SolveConfig("direach", threads=4))
    assert a == b
