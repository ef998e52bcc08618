"""Shared oracles. Nothing here touches the package's matrix code."""

import sys
from collections import deque

import numpy as np
import pytest

from msreach.graph import DiGraph, SourceSet


def adj_lists(g):
    return [g.successors(u).tolist() for u in range(g.n)]


def bfs_set(adj, s, limit=None):
    """Plain deque BFS; returns {vertex: hops}."""
    dist = {s: 0}
    q = deque([s])
    while q:
        u = q.popleft()
        if limit is not None and dist[u] >= limit:
            continue
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def reach_dense(g, sources, limit=None):
    adj = adj_lists(g)
    out = np.zeros((len(sources), g.n), dtype=bool)
    for i, s in enumerate(sources):
        out[i, list(bfs_set(adj, s, limit))] = True
    return out


def path_graph(n):
    return DiGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def random_sources(rng, n, size):
    return SourceSet(tuple(sorted(rng.choice(n, size=size, replace=False).tolist())))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
