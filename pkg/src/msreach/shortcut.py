"""D-shortcut sets: path cover, sampling, shortcut edges and verification.

Construction is randomized. :func:`build_d_shortcut` verifies every candidate
set exhaustively and retries with doubled sampling constants, falling back to
the full closure when all attempts fail, so its output is always a valid
D-shortcut.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from msreach.boolmat import BitMatrix
from msreach.graph import (
    Condensation,
    DiGraph,
    SourceSet,
    bounded_hop_reach,
    closure_rows,
    scc_condense,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PathCollection:
    paths: tuple[tuple[int, ...], ...]
    disjoint: bool = True

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(tuple(int(v) for v in p) for p in self.paths))
        if self.disjoint:
            flat = [v for p in self.paths for v in p]
            if len(flat) != len(set(flat)):
                raise ValueError("paths flagged disjoint share a vertex")

    def __len__(self) -> int:
        return len(self.paths)

    def reversed(self) -> "PathCollection":
        return PathCollection(tuple(p[::-1] for p in self.paths), self.disjoint)


@dataclass(frozen=True)
class SamplingParams:
    c_path: float = 4.0
    c_vertex: float = 4.0
    max_retries: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.c_path < 1 or self.c_vertex < 1:
            raise ValueError("sampling constants must be at least 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")

    def attempt(self, i: int) -> "SamplingParams":
        """Parameters for retry ``i``: constants doubled ``i`` times, fresh seed stream."""
        if i == 0:
            return self
        seed = int(np.random.SeedSequence([self.seed, i]).generate_state(1)[0])
        return replace(self, c_path=self.c_path * 2 ** i, c_vertex=self.c_vertex * 2 ** i, seed=seed)


@dataclass(frozen=True)
class ShortcutSet:
    edges: tuple[tuple[int, int], ...]
    d_target: int
    verified: bool = False
    retries: int = 0
    fallback: bool = False
    n_paths: int = 0
    n_vertices: int = 0

    def __len__(self) -> int:
        return len(self.edges)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)

    def to_text(self) -> str:
        lines = [f"# shortcut d={self.d_target} verified={str(self.verified).lower()}"]
        lines += [f"{u} {v}" for u, v in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ShortcutSet":
        d, verified, edges = None, False, []
        for raw in text.splitlines():
            line = raw.strip()
            if line.startswith("# shortcut"):
                fields = dict(tok.split("=", 1) for tok in line.split()[2:])
                d = int(fields["d"])
                verified = fields.get("verified") == "true"
            elif line and not line.startswith("#"):
                u, v = line.split()
                edges.append((int(u), int(v)))
        if d is None:
            raise ValueError("missing '# shortcut' header")
        return cls(tuple(edges), d, verified)


def path_cover(cond: Condensation, closure: BitMatrix) -> PathCollection:
    """Minimum vertex-disjoint cover of the condensation's closure, lifted to G's vertices.

    Each chain of components becomes one path of G-vertices; members of an SCC
    are listed in increasing id order, and all of them are mutually reachable.
    """
    c = cond.dag.n
    strict = closure.to_bool() & ~np.eye(c, dtype=bool)
    match = maximum_bipartite_matching(csr_matrix(strict), perm_type="column") if c else np.empty(0, int)
    nxt = np.full(c, -1, dtype=np.int64)
    has_pred = np.zeros(c, dtype=bool)
    for u, v in enumerate(match):
        if v >= 0:
            nxt[u] = v
            has_pred[v] = True
    members = cond.members
    paths = []
    for head in range(c):
        if has_pred[head]:
            continue
        seq: list[int] = []
        u = head
        while u >= 0:
            seq.extend(members[u].tolist())
            u = nxt[u]
        paths.append(tuple(seq))
    return PathCollection(tuple(paths), disjoint=True)


def sample_prob(c: float, n: int, d: int) -> float:
    return min(1.0, c * math.log(max(n, 2)) / d)


def sample_shortcut_candidates(p: PathCollection, n: int, d: int,
                               params: SamplingParams) -> tuple[PathCollection, SourceSet]:
    if d < 1:
        raise ValueError("d must be at least 1")
    rng = np.random.default_rng(np.random.SeedSequence(params.seed))
    keep_p = rng.random(len(p)) < sample_prob(params.c_path, n, d)
    keep_v = rng.random(n) < sample_prob(params.c_vertex, n, d)
    pprime = PathCollection(tuple(q for q, k in zip(p.paths, keep_p) if k), p.disjoint)
    return pprime, SourceSet(tuple(np.flatnonzero(keep_v).tolist()))


def first_reachable(reach: np.ndarray, path: tuple[int, ...]) -> np.ndarray:
    """Per row of ``reach`` the first vertex of ``path`` it marks, or -1."""
    hits = reach[:, list(path)]
    idx = hits.argmax(axis=1)
    arr = np.asarray(path, dtype=np.int64)[idx]
    return np.where(hits.any(axis=1), arr, -1)


def shortcut_edges(g: DiGraph, pprime: PathCollection, vprime: SourceSet) -> ShortcutSet:
    """Edge ``(v, w)`` for each sampled v and path p, w being the first vertex of p that v reaches."""
    if not len(pprime) or not len(vprime):
        return ShortcutSet((), 0, n_paths=len(pprime), n_vertices=len(vprime))
    reach = closure_rows(g).to_bool()[list(vprime.ids)]
    edges = []
    for path in pprime.paths:
        w = first_reachable(reach, path)
        edges.extend((v, int(x)) for v, x in zip(vprime.ids, w) if x >= 0)
    return ShortcutSet(tuple(edges), 0, n_paths=len(pprime), n_vertices=len(vprime))


def path_internal_edges(path: tuple[int, ...]) -> list[tuple[int, int]]:
    """Edges making every forward pair of ``path`` at most two hops apart.

    Each segment routes through its midpoint, then both halves recurse; this
    uses O(L log L) edges for a path of L vertices.
    """
    out = []
    stack = [(0, len(path) - 1)]
    while stack:
        lo, hi = stack.pop()
        if hi <= lo:
            continue
        mid = (lo + hi) // 2
        out.extend((path[i], path[mid]) for i in range(lo, mid))
        out.extend((path[mid], path[j]) for j in range(mid + 1, hi + 1))
        stack.append((lo, mid - 1))
        stack.append((mid + 1, hi))
    return out


Connect = Callable[[DiGraph, PathCollection, SourceSet], Iterable[tuple[int, int]]]


def _default_connect(g: DiGraph, pprime: PathCollection, vprime: SourceSet):
    return shortcut_edges(g, pprime, vprime).edges


def _clean(g: DiGraph, edges: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    if not arr.size:
        return ()
    arr = arr[arr[:, 0] != arr[:, 1]]
    codes = np.unique(arr[:, 0] * g.n + arr[:, 1])
    e = g.edges()
    codes = np.setdiff1d(codes, e[:, 0] * g.n + e[:, 1], assume_unique=False)
    return tuple(zip((codes // g.n).tolist(), (codes % g.n).tolist()))


def closure_shortcut(g: DiGraph, d: int) -> ShortcutSet:
    """Every reachable pair not already an edge; a 1-shortcut, hence a D-shortcut for all D."""
    dense = closure_rows(g).to_bool()
    np.fill_diagonal(dense, False)
    src, dst = np.nonzero(dense)
    return ShortcutSet(_clean(g, zip(src.tolist(), dst.tolist())), d)


def clamp_d(n: int, d: int) -> int:
    if d < 1:
        raise ValueError("d must be at least 1")
    cap = max(1, math.ceil(math.sqrt(n)))
    if d > cap:
        log.warning("shortcut target d=%d exceeds ceil(sqrt(n))=%d; clamping", d, cap)
        return cap
    return d


def build_d_shortcut(g: DiGraph, d: int, params: SamplingParams | None = None,
                     connect: Connect | None = None, threads: int = 1) -> ShortcutSet:
    """A verified d-shortcut for ``g``.

    ``connect`` computes the sampled vertex to sampled path edges; the default
    reads them off the BFS closure, the recursive solver supplies its own.
    """
    params = params or SamplingParams()
    connect = connect or _default_connect
    d = clamp_d(g.n, d)
    cond = scc_condense(g)
    cover = path_cover(cond, closure_rows(cond.dag))
    for attempt in range(params.max_retries + 1):
        p = params.attempt(attempt)
        pprime, vprime = sample_shortcut_candidates(cover, g.n, d, p)
        cand = list(connect(g, pprime, vprime))
        for path in pprime.paths:
            cand.extend(path_internal_edges(path))
        h = ShortcutSet(_clean(g, cand), d, retries=attempt,
                        n_paths=len(pprime), n_vertices=len(vprime))
        if verify_d_shortcut(g, h, threads=threads):
            return replace(h, verified=True)
        full = len(pprime) == len(cover) and len(vprime) == g.n
        log.debug("shortcut attempt %d failed (|P'|=%d, |V'|=%d)", attempt, len(pprime), len(vprime))
        if full:
            # sampling is already exhaustive; larger constants cannot help
            break
    h = closure_shortcut(g, d)
    return replace(h, verified=verify_d_shortcut(g, h, threads=threads), retries=attempt,
                   fallback=True, n_paths=len(cover), n_vertices=g.n)


def verify_d_shortcut(g: DiGraph, h: ShortcutSet, threads: int = 1) -> bool:
    """True iff H lies in TC(G) and G plus H reaches everything G reaches within ``d_target`` hops."""
    truth = closure_rows(g)
    edges = h.as_array()
    if edges.size:
        dense = truth.to_bool()
        if not dense[edges[:, 0], edges[:, 1]].all():
            return False
    aug = g.union(edges) if edges.size else g
    everyone = SourceSet.all(g.n)
    return bounded_hop_reach(aug, everyone, h.d_target, threads=threads).rows == truth
