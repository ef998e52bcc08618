"""Recursive shortcut construction.

At depth k >= 1 the sampled-vertex to sampled-path edges are not read off a
full closure. Instead the paths act as sources: a depth k-1 shortcut H' of G
brings every reachable pair within D' hops, and a paths-direachability solve
on the reversed graph G + H' finds, for every sampled vertex v and sampled
path p, the last vertex of reversed p that reaches v. That is the first
vertex of p reachable from v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from msreach import planner
from msreach.direach import MAX_DEPTH, realize_d, run_products
from msreach.graph import DiGraph, ReachResult, SourceSet
from msreach.maxmin import pdr_solve
from msreach.shortcut import PathCollection, SamplingParams, ShortcutSet, build_d_shortcut


def choose_delta_recursive(sigma: float, k: int, mu: float = 2.0,
                           table: planner.OmegaTable = planner.DEFAULT_TABLE) -> float:
    """delta balancing the depth-k shortcut cost against the products.

    Solves g_{k-1}(1 - 2 delta) = omega(sigma) + delta, with g_{-1}(x) = mu + x,
    so k = 0 gives (1 + mu - omega(sigma)) / 3 and omega(sigma) + delta = g_k(sigma).
    """
    if not 0.0 <= sigma <= 1.0:
        raise ValueError("sigma must lie in [0, 1]")
    if k < 0:
        raise ValueError("k must be non-negative")
    return min(0.5, max(1e-12, planner.balance_delta(sigma, k, mu, table)))


def _log_n(n: int, size: int) -> float:
    return math.log(size) / math.log(n) if n > 1 and size > 1 else 0.0


@dataclass(frozen=True)
class RecurLevel:
    depth: int
    sigma: float | None = None
    delta: float | None = None
    d: int | None = None
    n_paths: int | None = None
    n_vertices: int | None = None
    retries: int | None = None
    fallback: bool | None = None

    def line(self) -> str:
        if self.d is None:
            return f"  depth={self.depth} unused"
        return (f"  depth={self.depth} sigma={self.sigma:.6f} delta={self.delta:.6f} D={self.d} "
                f"paths={self.n_paths} vertices={self.n_vertices} retries={self.retries} "
                f"fallback={str(self.fallback).lower()}")


@dataclass
class RecurTrace:
    """One entry per depth, outermost first. Unused levels are placeholders."""

    levels: list[RecurLevel] = field(default_factory=list)

    def lines(self) -> list[str]:
        return [lvl.line() for lvl in self.levels]


def _inner_params(params: SamplingParams, depth: int, call: int) -> SamplingParams:
    seed = int(np.random.SeedSequence([params.seed, depth, call]).generate_state(1)[0])
    return SamplingParams(params.c_path, params.c_vertex, params.max_retries, seed)


def recursive_shortcut(g: DiGraph, d: int, k: int, params: SamplingParams | None = None,
                       sigma: float = 0.0, delta: float | None = None, mu: float = 2.0,
                       threads: int = 1) -> tuple[ShortcutSet, RecurTrace]:
    """A verified d-shortcut whose vertex-to-path edges come from a depth k-1 solve."""
    if k < 0 or k > MAX_DEPTH:
        raise ValueError(f"k must lie in [0, {MAX_DEPTH}]")
    params = params or SamplingParams()
    if delta is None:
        delta = _log_n(g.n, d)
    if k == 0:
        h = build_d_shortcut(g, d, params, threads=threads)
        return h, RecurTrace([_level(0, sigma, delta, h)])

    inner = {"trace": RecurTrace([RecurLevel(j) for j in range(k - 1, -1, -1)])}
    calls = [0]

    def connect(graph: DiGraph, pprime: PathCollection, vprime: SourceSet):
        calls[0] += 1
        if not len(pprime) or not len(vprime):
            inner["trace"] = RecurTrace([RecurLevel(j) for j in range(k - 1, -1, -1)])
            return []
        sub_sigma = _log_n(graph.n, len(pprime))
        sub_delta = choose_delta_recursive(sub_sigma, k - 1, mu)
        sub_d = realize_d(graph.n, sub_delta)
        h_sub, sub_trace = recursive_shortcut(graph, sub_d, k - 1, _inner_params(params, k, calls[0]),
                                              sigma=sub_sigma, delta=sub_delta, mu=mu, threads=threads)
        inner["trace"] = sub_trace
        aug = graph.union(h_sub.as_array()) if len(h_sub) else graph
        pdr = pdr_solve(aug.reverse, pprime.reversed(), sub_d)
        vs = np.asarray(vprime.ids, dtype=np.int64)
        firsts = pdr.last[:, vs]
        rows, cols = np.nonzero(firsts >= 0)
        return list(zip(vs[cols].tolist(), firsts[rows, cols].tolist()))

    h = build_d_shortcut(g, d, params, connect=connect, threads=threads)
    return h, RecurTrace([_level(k, sigma, delta, h)] + inner["trace"].levels)


def _level(depth: int, sigma: float, delta: float, h: ShortcutSet) -> RecurLevel:
    return RecurLevel(depth, sigma, delta, h.d_target, h.n_paths, h.n_vertices, h.retries, h.fallback)


def recur_direach(g: DiGraph, s: SourceSet, d: int, k: int, params: SamplingParams | None = None,
                  mu: float = 2.0, threads: int = 1) -> tuple[ReachResult, RecurTrace]:
    """Exact S x V reachability with a depth-k recursively built d-shortcut."""
    if d < 1:
        raise ValueError("d must be at least 1")
    s.check(g.n)
    h, trace = recursive_shortcut(g, d, k, params, sigma=s.sigma(g.n), mu=mu, threads=threads)
    return run_products(g, s, d, h.as_array(), threads=threads), trace
