"""Max-min (bottleneck) products and paths-direachability built from them.

A path p of the input collection "owns" a sequence q. Each element z of q
carries the label v_p(z): the latest vertex of p known to reach z. One
:func:`ohsdr_step` extends every sequence by one hop; :func:`pdr_solve` chains
the steps for a fixed hop budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from msreach.boolmat import BitMatrix, add_identity, bmm, restrict_rows
from msreach.graph import DiGraph, ReachResult, SourceSet, topological_rank
from msreach.shortcut import PathCollection

NEG = -np.inf
POS = np.inf
_CHUNK_BUDGET = 1 << 22


@dataclass(frozen=True, eq=False)
class MaxMinMatrix:
    """Entries in {-inf} U {0, 1, 2, ...} U {+inf}, held as float64."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("expected a 2-d array")
        finite = v[np.isfinite(v)]
        if np.isnan(v).any() or (finite < 0).any() or (finite != np.floor(finite)).any():
            raise ValueError("entries must be -inf, +inf or non-negative integers")
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MaxMinMatrix):
            return NotImplemented
        return np.array_equal(self.values, other.values)


def maxmin_product(b: MaxMinMatrix, a: MaxMinMatrix) -> MaxMinMatrix:
    """``C[i, j] = max_k min(B[i, k], A[k, j])``; an empty max is -inf."""
    bv, av = b.values, a.values
    if bv.shape[1] != av.shape[0]:
        raise ValueError(f"dimension mismatch: {bv.shape} times {av.shape}")
    out = np.full((bv.shape[0], av.shape[1]), NEG)
    inner, cols = av.shape
    if not inner or not cols:
        return MaxMinMatrix(out)
    step = max(1, _CHUNK_BUDGET // (inner * cols))
    for lo in range(0, bv.shape[0], step):
        blk = bv[lo:lo + step]
        # a column of B that is -inf throughout the block contributes nothing
        used = np.flatnonzero((blk > NEG).any(axis=0))
        if used.size:
            out[lo:lo + step] = np.minimum(blk[:, used, None], av[None, used]).max(axis=1)
    return MaxMinMatrix(out)


def edge_matrix(g: DiGraph) -> MaxMinMatrix:
    """+inf on edges, -inf elsewhere."""
    a = np.full((g.n, g.n), NEG)
    e = g.edges()
    a[e[:, 0], e[:, 1]] = POS
    return MaxMinMatrix(a)


def maxmin_by_edges(b: np.ndarray, g: DiGraph) -> np.ndarray:
    """``B`` max-min times :func:`edge_matrix` of ``g``, evaluated over the edge list.

    With A restricted to +/-inf, ``min(B[i, y], A[y, z])`` is ``B[i, y]`` on an
    edge and -inf otherwise, so column z of the product is the max of B over
    the in-neighbours of z.
    """
    out = np.full((b.shape[0], g.n), NEG)
    rev = g.reverse
    if rev.m == 0 or b.shape[0] == 0:
        return out
    gathered = b[:, rev.indices]
    nonempty = np.flatnonzero(np.diff(rev.indptr))
    out[:, nonempty] = np.maximum.reduceat(gathered, rev.indptr[nonempty], axis=1)
    return out


@dataclass(frozen=True, eq=False)
class SequenceSet:
    """Vertex sequences with their origin paths and per-element labels.

    ``labels[i][t]`` is the label v_p of ``sequences[i][t]``; ``rank`` is the
    topological rank used to order elements that share a label.
    """

    sequences: tuple[tuple[int, ...], ...]
    origins: tuple[tuple[int, ...], ...]
    labels: tuple[tuple[int, ...], ...]
    rank: np.ndarray

    @classmethod
    def from_paths(cls, g: DiGraph, paths: PathCollection) -> "SequenceSet":
        seqs = tuple(tuple(p) for p in paths.paths)
        return cls(seqs, seqs, seqs, topological_rank(g))

    def label_positions(self, i: int) -> list[int]:
        where = {v: t for t, v in enumerate(self.origins[i])}
        return [where[x] for x in self.labels[i]]


@dataclass
class _State:
    """Array form of a SequenceSet.

    ``seq[i]`` lists sequence i padded with -1, ``lab[i, z]`` is the label
    vertex of z (-1 when z is absent) and ``pos[i, v]`` is v's index on the
    origin path (-1 off the path).
    """

    seq: np.ndarray
    lab: np.ndarray
    pos: np.ndarray


def _to_state(n: int, seqs: SequenceSet) -> _State:
    r = len(seqs.sequences)
    seq = np.full((r, n), -1, dtype=np.int64)
    lab = np.full((r, n), -1, dtype=np.int64)
    pos = np.full((r, n), -1, dtype=np.int64)
    for i, (q, labels, p) in enumerate(zip(seqs.sequences, seqs.labels, seqs.origins)):
        seq[i, :len(q)] = q
        lab[i, list(q)] = labels
        pos[i, list(p)] = np.arange(len(p))
    return _State(seq, lab, pos)


def _from_state(st: _State, seqs: SequenceSet) -> SequenceSet:
    new_seqs, new_labels = [], []
    for i in range(st.seq.shape[0]):
        q = st.seq[i][st.seq[i] >= 0]
        new_seqs.append(tuple(q.tolist()))
        new_labels.append(tuple(st.lab[i, q].tolist()))
    return SequenceSet(tuple(new_seqs), seqs.origins, tuple(new_labels), seqs.rank)


def _step(g: DiGraph, st: _State, rank: np.ndarray, dense: bool) -> _State:
    r, n = st.seq.shape
    rows, cols = np.nonzero(st.seq >= 0)
    b = np.full((r, n), NEG)
    b[rows, st.seq[rows, cols]] = cols + 1
    if dense:
        c = maxmin_product(MaxMinMatrix(b), edge_matrix(g)).values
    else:
        c = maxmin_by_edges(b, g)
    reached = np.maximum(c, b) > NEG
    from_c = c > b
    ri = np.arange(r)[:, None]
    # the witness is the latest sequence element with an edge into z
    widx = np.where(from_c, c - 1, 0).astype(np.int64)
    witness = st.seq[ri, widx]
    lab = np.where(from_c, st.lab[ri, np.maximum(witness, 0)], st.lab)
    lab = np.where(reached, lab, -1)
    labpos = st.pos[ri, np.maximum(lab, 0)]
    # group by label position on the origin path, topological rank inside a group
    key = np.where(reached, labpos * n + rank[None, :], np.iinfo(np.int64).max)
    order = np.argsort(key, axis=1, kind="stable")
    count = reached.sum(axis=1)
    seq = np.where(np.arange(n)[None, :] < count[:, None], order, -1)
    return _State(seq, lab, st.pos)


def ohsdr_step(g: DiGraph, seqs: SequenceSet, dense: bool = False) -> SequenceSet:
    """One hop of sequence direachability, relabelled and re-sorted.

    With B[q, v] the 1-based index of v in q and A the +/-inf edge matrix,
    C = B max-min A and C' = max(C, B). Every z with finite C' joins q; a z
    reached through C takes the label of its witness, otherwise it keeps its
    own. The new sequence is grouped by label position on the origin path,
    ties broken by topological rank. ``dense`` switches the product to the
    general kernel, for cross-checking.
    """
    st = _step(g, _to_state(g.n, seqs), seqs.rank, dense)
    return _from_state(st, seqs)


@dataclass(frozen=True, eq=False)
class PdrResult:
    """``last[i, z]`` is v_p(z) for the i-th path, or -1 when z is not reached."""

    paths: PathCollection
    last: np.ndarray
    hops: int

    def reached(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.last[i] >= 0)

    def to_text(self) -> str:
        out = []
        for i, p in enumerate(self.paths.paths):
            out.append(f"# path {i}: " + " ".join(map(str, p)))
            out.extend(f"{z} {self.last[i, z]}" for z in self.reached(i).tolist())
        return "\n".join(out) + ("\n" if out else "")


def pdr_solve(g: DiGraph, paths: PathCollection, hops: int, dense: bool = False) -> PdrResult:
    """For each path p and each z within ``hops`` of p, the last vertex of p reaching z."""
    if hops < 0:
        raise ValueError("hop budget must be non-negative")
    seqs = SequenceSet.from_paths(g, paths)
    st = _to_state(g.n, seqs)
    for _ in range(hops):
        nxt = _step(g, st, seqs.rank, dense)
        if np.array_equal(nxt.seq, st.seq) and np.array_equal(nxt.lab, st.lab):
            break
        st = nxt
    last = st.lab.copy()
    return PdrResult(paths, last, hops)


def dr_solve(g: DiGraph, s: SourceSet, hops: int, threads: int = 1) -> ReachResult:
    """Bounded-hop reachability from S as ``hops`` rectangular Boolean products."""
    if hops < 0:
        raise ValueError("hop budget must be non-negative")
    s.check(g.n)
    a1 = add_identity(g.adjacency())
    b = restrict_rows(BitMatrix.identity(g.n), s)
    for _ in range(hops):
        nxt = bmm(b, a1, threads=threads)
        if nxt == b:
            break
        b = nxt
    return ReachResult(s, b)
