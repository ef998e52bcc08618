"""Directed graphs in compressed-row form, generators, condensation and BFS.

The BFS routines here are the ground truth every matrix-based solver in the
package is checked against, so they deliberately share no code with
:mod:`msreach.boolmat`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence, TextIO

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from msreach.boolmat import BitMatrix


class EdgeListError(ValueError):
    """Raised for malformed edge-list or sources input."""


@dataclass(frozen=True, eq=False)
class DiGraph:
    """Immutable digraph on vertices ``0..n-1`` with sorted, duplicate-free rows."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]] | np.ndarray) -> "DiGraph":
        arr = np.asarray(edges if isinstance(edges, np.ndarray) else list(edges), dtype=np.int64)
        arr = arr.reshape(-1, 2)
        if n < 0:
            raise ValueError("vertex count must be non-negative")
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise ValueError("edge endpoint out of range")
        codes = np.unique(arr[:, 0] * n + arr[:, 1]) if arr.size else np.empty(0, np.int64)
        src = codes // n if n else codes
        dst = codes % n if n else codes
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        indices = dst.astype(np.int64)
        indptr.flags.writeable = False
        indices.flags.writeable = False
        return cls(n, indptr, indices)

    @property
    def m(self) -> int:
        return int(self.indices.size)

    def successors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def edges(self) -> np.ndarray:
        """All edges as an ``(m, 2)`` array in row-major order."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        return np.column_stack([src, self.indices])

    def has_edge(self, u: int, v: int) -> bool:
        row = self.successors(u)
        i = np.searchsorted(row, v)
        return bool(i < row.size and row[i] == v)

    @cached_property
    def reverse(self) -> "DiGraph":
        return DiGraph.from_edges(self.n, self.edges()[:, ::-1])

    def union(self, extra: Iterable[tuple[int, int]] | np.ndarray) -> "DiGraph":
        """A new graph with ``extra`` edges added; ``self`` is untouched."""
        extra = np.asarray(extra if isinstance(extra, np.ndarray) else list(extra), dtype=np.int64)
        return DiGraph.from_edges(self.n, np.vstack([self.edges(), extra.reshape(-1, 2)]))

    def adjacency(self) -> BitMatrix:
        dense = np.zeros((self.n, self.n), dtype=bool)
        e = self.edges()
        dense[e[:, 0], e[:, 1]] = True
        return BitMatrix.from_bool(dense)

    def to_text(self) -> str:
        lines = [f"{self.n} {self.m}"]
        lines.extend(f"{u} {v}" for u, v in self.edges().tolist())
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SourceSet:
    """Ordered distinct source vertices; the order fixes result row order."""

    ids: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(int(v) for v in self.ids))
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("source ids must be distinct")
        if any(v < 0 for v in self.ids):
            raise ValueError("source ids must be non-negative")

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)

    def check(self, n: int) -> None:
        bad = [v for v in self.ids if v >= n]
        if bad:
            raise ValueError(f"source {bad[0]} out of range for n={n}")

    def sigma(self, n: int) -> float:
        """The exponent log_n |S| (0 for a single source or n <= 1)."""
        if n <= 1 or len(self.ids) <= 1:
            return 0.0
        return math.log(len(self.ids)) / math.log(n)

    @classmethod
    def all(cls, n: int) -> "SourceSet":
        return cls(tuple(range(n)))


@dataclass(frozen=True, eq=False)
class Condensation:
    """SCC contraction. Component ids are topological ranks of the dag."""

    scc_id: np.ndarray
    dag: DiGraph
    topo: np.ndarray

    @cached_property
    def members(self) -> list[np.ndarray]:
        order = np.argsort(self.scc_id, kind="stable")
        bounds = np.searchsorted(self.scc_id[order], np.arange(self.dag.n + 1))
        return [order[bounds[c]:bounds[c + 1]] for c in range(self.dag.n)]


@dataclass(frozen=True, eq=False)
class ReachResult:
    sources: SourceSet
    rows: BitMatrix

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ReachResult):
            return NotImplemented
        return self.sources == other.sources and self.rows == other.rows

    def reachable(self, i: int) -> np.ndarray:
        """Sorted vertex ids reachable from the i-th source."""
        return self.rows.row_indices(i)

    def to_text(self, hex_rows: bool = False) -> str:
        out = []
        for i, s in enumerate(self.sources):
            if hex_rows:
                out.append(f"{s}: {self.rows.hex_row(i)}")
            else:
                out.append(f"{s}: " + " ".join(map(str, self.reachable(i).tolist())))
        return "\n".join(out) + ("\n" if out else "")


# -- text formats ----------------------------------------------------------------

def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield lineno, line


def load_edge_list(stream: TextIO | str) -> DiGraph:
    """Parse ``"n m"`` followed by ``m`` lines ``"u v"``; duplicates are dropped."""
    text = stream if isinstance(stream, str) else stream.read()
    lines = list(_content_lines(text))
    if not lines:
        raise EdgeListError("empty input at line 1")
    lineno, header = lines[0]
    parts = header.split()
    try:
        if len(parts) != 2:
            raise ValueError
        n, m = int(parts[0]), int(parts[1])
    except ValueError:
        raise EdgeListError(f"malformed header at line {lineno}") from None
    if n < 0 or m < 0:
        raise EdgeListError(f"malformed header at line {lineno}")
    body = lines[1:]
    if len(body) != m:
        where = body[-1][0] if body else lineno
        raise EdgeListError(f"expected {m} edges, found {len(body)} at line {where}")
    edges = np.empty((m, 2), dtype=np.int64)
    for i, (lineno, line) in enumerate(body):
        parts = line.split()
        try:
            if len(parts) != 2:
                raise ValueError
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListError(f"malformed line at line {lineno}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise EdgeListError(f"vertex id out of range at line {lineno}")
        edges[i] = (u, v)
    return DiGraph.from_edges(n, edges)


def load_sources(stream: TextIO | str, n: int) -> SourceSet:
    text = stream if isinstance(stream, str) else stream.read()
    ids = []
    seen = set()
    for lineno, line in _content_lines(text):
        try:
            v = int(line)
        except ValueError:
            raise EdgeListError(f"malformed source at line {lineno}") from None
        if not 0 <= v < n:
            raise EdgeListError(f"vertex id out of range at line {lineno}")
        if v in seen:
            raise EdgeListError(f"duplicate source at line {lineno}")
        seen.add(v)
        ids.append(v)
    return SourceSet(tuple(ids))


# -- generators ------------------------------------------------------------------

def max_edges(n: int, dag: bool = False) -> int:
    return n * (n - 1) // 2 if dag else n * (n - 1)


def gen_random(n: int, mu: float, seed: int, dag: bool = False) -> DiGraph:
    """Uniform random digraph with ``round(n**mu)`` distinct non-loop edges.

    With ``dag`` set, unordered pairs are sampled and oriented from lower to
    higher rank under a random vertex permutation.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 1.0 <= mu <= 2.0:
        raise ValueError("mu must lie in [1, 2]")
    m = int(round(n ** mu))
    if m > max_edges(n, dag):
        raise ValueError(f"density infeasible: {m} edges requested, at most {max_edges(n, dag)} possible")
    rng = np.random.default_rng(seed)
    if dag:
        picks = rng.choice(max_edges(n, dag=True), size=m, replace=False)
        # unrank pair index -> (i, j), i < j, row-major over the upper triangle
        i = (2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * picks.astype(np.float64))) // 2
        i = i.astype(np.int64)
        # guard against float rounding at row boundaries
        start = i * (2 * n - i - 1) // 2
        i = np.where(picks < start, i - 1, i)
        start = i * (2 * n - i - 1) // 2
        nxt = (i + 1) * (2 * n - i - 2) // 2
        i = np.where(picks >= nxt, i + 1, i)
        start = i * (2 * n - i - 1) // 2
        j = picks - start + i + 1
        perm = rng.permutation(n)
        edges = np.column_stack([perm[i], perm[j]])
    else:
        picks = rng.choice(max_edges(n), size=m, replace=False)
        u = picks // (n - 1)
        v = picks % (n - 1)
        v = np.where(v >= u, v + 1, v)
        edges = np.column_stack([u, v])
    return DiGraph.from_edges(n, edges)


# -- condensation ----------------------------------------------------------------

def scc_condense(g: DiGraph) -> Condensation:
    if "condensation" in g._cache:
        return g._cache["condensation"]
    n = g.n
    if n == 0:
        empty = DiGraph.from_edges(0, [])
        cond = Condensation(np.empty(0, np.int64), empty, np.empty(0, np.int64))
        g._cache["condensation"] = cond
        return cond
    mat = csr_matrix((np.ones(g.m, dtype=np.int8), g.indices, g.indptr), shape=(n, n))
    count, labels = connected_components(mat, directed=True, connection="strong")
    e = g.edges()
    cu, cv = labels[e[:, 0]], labels[e[:, 1]]
    keep = cu != cv
    raw = DiGraph.from_edges(count, np.column_stack([cu[keep], cv[keep]]))
    order = _kahn(raw)
    rank = np.empty(count, dtype=np.int64)
    rank[order] = np.arange(count)
    scc_id = rank[labels]
    dag = DiGraph.from_edges(count, np.column_stack([rank[cu[keep]], rank[cv[keep]]]))
    cond = Condensation(scc_id, dag, np.arange(count, dtype=np.int64))
    g._cache["condensation"] = cond
    return cond


def _kahn(g: DiGraph) -> np.ndarray:
    indeg = np.bincount(g.indices, minlength=g.n)
    stack = list(np.flatnonzero(indeg == 0)[::-1])
    order = []
    while stack:
        u = stack.pop()
        order.append(u)
        for v in g.successors(u):
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
    if len(order) != g.n:
        raise ValueError("graph has a cycle")
    return np.asarray(order, dtype=np.int64)


def topological_rank(g: DiGraph) -> np.ndarray:
    """A rank per vertex: the condensation order, ties inside an SCC by vertex id."""
    cond = scc_condense(g)
    order = np.lexsort((np.arange(g.n), cond.scc_id))
    rank = np.empty(g.n, dtype=np.int64)
    rank[order] = np.arange(g.n)
    return rank


# -- BFS oracles -----------------------------------------------------------------

def _sparse_transpose(g: DiGraph):
    """Reverse adjacency as a CSR matrix, so that ``AT @ F`` expands frontier columns."""
    if "sparse_t" not in g._cache:
        r = g.reverse
        g._cache["sparse_t"] = csr_matrix(
            (np.ones(r.m, dtype=np.int32), r.indices, r.indptr), shape=(g.n, g.n))
    return g._cache["sparse_t"]


def _bfs_columns(g: DiGraph, ids: np.ndarray, limit: int | None) -> np.ndarray:
    """Level-synchronous BFS from every id at once; column i is the visited set of ids[i]."""
    seen = np.zeros((g.n, ids.size), dtype=bool)
    seen[ids, np.arange(ids.size)] = True
    frontier = seen.astype(np.int32)
    at = _sparse_transpose(g)
    hops = 0
    while limit is None or hops < limit:
        nxt = (at @ frontier) > 0
        nxt &= ~seen
        if not nxt.any():
            break
        seen |= nxt
        frontier = nxt.astype(np.int32)
        hops += 1
    return seen


def _reach_rows(g: DiGraph, s: SourceSet, limit: int | None, threads: int) -> ReachResult:
    s.check(g.n)
    ids = np.asarray(s.ids, dtype=np.int64)
    if threads > 1 and ids.size > 1:
        chunks = np.array_split(ids, min(threads, ids.size))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cols = list(pool.map(lambda c: _bfs_columns(g, c, limit), chunks))
        seen = np.hstack(cols)
    else:
        seen = _bfs_columns(g, ids, limit)
    return ReachResult(s, BitMatrix.from_bool(seen.T))


def multi_source_reach(g: DiGraph, s: SourceSet, threads: int = 1) -> ReachResult:
    """Exact reachability: an independent BFS per source, advanced level by level together."""
    return _reach_rows(g, s, None, threads)


def bounded_hop_reach(g: DiGraph, s: SourceSet, d: int, threads: int = 1) -> ReachResult:
    """Vertices reachable from each source along dipaths of at most ``d`` edges."""
    if d < 0:
        raise ValueError("hop bound must be non-negative")
    return _reach_rows(g, s, d, threads)


def closure_rows(g: DiGraph) -> BitMatrix:
    """All-pairs BFS reachability, cached on the graph instance."""
    if "closure" not in g._cache:
        g._cache["closure"] = multi_source_reach(g, SourceSet.all(g.n)).rows
    return g._cache["closure"]


def parse_reach_result(text: str, n: int) -> ReachResult:
    """Inverse of :meth:`ReachResult.to_text`; either row form is accepted, '#' lines skipped."""
    ids, rows = [], []
    for lineno, line in _content_lines(text):
        head, sep, tail = line.partition(":")
        if not sep:
            raise EdgeListError(f"malformed result line at line {lineno}")
        try:
            s = int(head)
            tail = tail.strip()
            row = np.zeros(n, dtype=bool)
            if tail.startswith("0x"):
                value = int(tail, 16)
                if value >> n:
                    raise EdgeListError(f"row wider than n={n} at line {lineno}")
                bits = np.frombuffer(value.to_bytes((n + 7) // 8 or 1, "little"), dtype=np.uint8)
                row[:] = np.unpackbits(bits, bitorder="little")[:n].astype(bool)
            elif tail:
                cols = np.array([int(t) for t in tail.split()], dtype=np.int64)
                if cols.min() < 0 or cols.max() >= n:
                    raise EdgeListError(f"vertex id out of range at line {lineno}")
                row[cols] = True
        except ValueError as exc:
            if isinstance(exc, EdgeListError):
                raise
            raise EdgeListError(f"malformed result line at line {lineno}") from None
        ids.append(s)
        rows.append(row)
    dense = np.vstack(rows) if rows else np.zeros((0, n), dtype=bool)
    try:
        sources = SourceSet(tuple(ids))
        sources.check(n)
    except ValueError as exc:
        raise EdgeListError(str(exc)) from None
    return ReachResult(sources, BitMatrix.from_bool(dense))
