"""Shortcut-then-multiply reachability and the solver facade.

The basic solver builds a D-shortcut H, forms A' = adj(G + H) + I, starts
from the rows of A' belonging to the sources and multiplies by A' until D
hops are covered. The hop target is D = n^delta, with delta balancing the
shortcut cost against the rectangular products.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from msreach import planner
from msreach.boolmat import add_identity, bmm, restrict_rows, transitive_closure
from msreach.graph import DiGraph, ReachResult, SourceSet, multi_source_reach
from msreach.shortcut import SamplingParams, ShortcutSet, build_d_shortcut

ALGORITHMS = ("naive", "tc", "direach", "recur")
MAX_DEPTH = 8
_DELTA_FLOOR = 1e-12


def _clamp_delta(delta: float) -> float:
    return min(0.5, max(_DELTA_FLOOR, delta))


def choose_delta_dense(sigma: float, table: planner.OmegaTable = planner.DEFAULT_TABLE) -> float:
    """delta = 1 - omega(sigma) / 3, clamped into (0, 1/2]."""
    return _clamp_delta(1.0 - planner.omega(sigma, table) / 3.0)


def choose_delta_sparse(sigma: float, mu: float,
                        table: planner.OmegaTable = planner.DEFAULT_TABLE) -> float:
    """delta = (1 + mu - omega(sigma)) / 3 for graphs with n^mu edges, clamped into (0, 1/2]."""
    if not 1.0 <= mu <= 2.0:
        raise ValueError("mu must lie in [1, 2]")
    return _clamp_delta((1.0 + mu - planner.omega(sigma, table)) / 3.0)


def realize_d(n: int, delta: float) -> int:
    return max(1, int(round(n ** delta)))


def run_products(g: DiGraph, s: SourceSet, d: int, extra: Iterable[tuple[int, int]] | np.ndarray = (),
                 threads: int = 1) -> ReachResult:
    """Rows of A' for S, multiplied by A' ``d - 1`` times, with A' = adj(G + extra) + I."""
    if d < 1:
        raise ValueError("d must be at least 1")
    s.check(g.n)
    extra = np.asarray(extra if isinstance(extra, np.ndarray) else list(extra), dtype=np.int64)
    aug = g.union(extra) if extra.size else g
    a1 = add_identity(aug.adjacency())
    b = restrict_rows(a1, s)
    for _ in range(d - 1):
        nxt = bmm(b, a1, threads=threads)
        if nxt == b:
            break
        b = nxt
    return ReachResult(s, b)


def direach(g: DiGraph, s: SourceSet, d: int, shortcut: ShortcutSet | Iterable | None = None,
            params: SamplingParams | None = None, threads: int = 1) -> ReachResult:
    """Exact S x V reachability through a d-shortcut and d hops of Boolean products.

    A supplied ``shortcut`` is used as is, without verification.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    if shortcut is None:
        shortcut = build_d_shortcut(g, d, params, threads=threads)
    edges = shortcut.as_array() if isinstance(shortcut, ShortcutSet) else shortcut
    return run_products(g, s, d, edges, threads=threads)


@dataclass(frozen=True)
class SolveConfig:
    algorithm: str = "direach"
    delta_override: float | None = None
    mu_hint: float | None = None
    k: int = 1
    sampling: SamplingParams = field(default_factory=SamplingParams)
    threads: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {', '.join(ALGORITHMS)}")
        if self.delta_override is not None and not 0 < self.delta_override <= 0.5:
            raise ValueError("delta_override must lie in (0, 0.5]")
        if self.mu_hint is not None and not 1.0 <= self.mu_hint <= 2.0:
            raise ValueError("mu_hint must lie in [1, 2]")
        if not 0 <= self.k <= MAX_DEPTH:
            raise ValueError(f"k must lie in [0, {MAX_DEPTH}]")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass
class SolveStats:
    algorithm: str
    sigma: float
    seconds: float = 0.0
    delta: float | None = None
    d: int | None = None
    shortcut_edges: int | None = None
    retries: int | None = None
    fallback: bool | None = None
    trace: list = field(default_factory=list)

    def line(self) -> str:
        parts = [f"algorithm={self.algorithm}", f"sigma={self.sigma:.6f}"]
        if self.delta is not None:
            parts += [f"delta={self.delta:.6f}", f"D={self.d}", f"shortcut_edges={self.shortcut_edges}",
                      f"retries={self.retries}", f"fallback={str(self.fallback).lower()}"]
        parts.append(f"seconds={self.seconds:.6f}")
        return " ".join(parts)


def solve(g: DiGraph, s: SourceSet, cfg: SolveConfig | None = None) -> tuple[ReachResult, SolveStats]:
    cfg = cfg or SolveConfig()
    s.check(g.n)
    sigma = s.sigma(g.n)
    stats = SolveStats(cfg.algorithm, sigma)
    start = time.perf_counter()
    if cfg.algorithm == "naive":
        result = multi_source_reach(g, s, threads=cfg.threads)
    elif cfg.algorithm == "tc":
        result = ReachResult(s, restrict_rows(transitive_closure(g, threads=cfg.threads), s))
    else:
        mu = cfg.mu_hint if cfg.mu_hint is not None else 2.0
        if cfg.delta_override is not None:
            delta = cfg.delta_override
        elif cfg.algorithm == "direach":
            delta = choose_delta_sparse(sigma, mu)
        else:
            from msreach.recur import choose_delta_recursive
            delta = choose_delta_recursive(sigma, cfg.k, mu)
        d = realize_d(g.n, delta)
        if cfg.algorithm == "direach":
            h = build_d_shortcut(g, d, cfg.sampling, threads=cfg.threads)
            result = run_products(g, s, d, h.as_array(), threads=cfg.threads)
        else:
            from msreach.recur import recursive_shortcut
            h, trace = recursive_shortcut(g, d, cfg.k, cfg.sampling, sigma=sigma, delta=delta,
                                          mu=mu, threads=cfg.threads)
            result = run_products(g, s, d, h.as_array(), threads=cfg.threads)
            stats.trace = trace.lines()
        stats.delta, stats.d = delta, d
        stats.shortcut_edges, stats.retries, stats.fallback = len(h), h.retries, h.fallback
    stats.seconds = time.perf_counter() - start
    return result, stats
