"""Word-packed Boolean matrices and the rectangular Boolean product.

Row ``i`` is stored as ``ceil(cols / 64)`` little-endian uint64 words, bit
``j`` of the row being column ``j``. Pad bits past ``cols`` are always zero,
so two matrices are equal exactly when their word arrays are equal.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from msreach.graph import DiGraph, SourceSet

WORD = 64
# bound on the temporary (rows x inner x words) block used by one bmm chunk
_CHUNK_BUDGET = 1 << 22


def _nwords(cols: int) -> int:
    return (cols + WORD - 1) // WORD


@dataclass(frozen=True, eq=False)
class BitMatrix:
    rows: int
    cols: int
    words: np.ndarray

    def __post_init__(self):
        if self.words.shape != (self.rows, _nwords(self.cols)) or self.words.dtype != np.uint64:
            raise ValueError("word array has the wrong shape or dtype")

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, np.zeros((rows, _nwords(cols)), dtype=np.uint64))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_bool(np.eye(n, dtype=bool))

    @classmethod
    def from_bool(cls, dense: np.ndarray) -> "BitMatrix":
        dense = np.asarray(dense, dtype=bool)
        if dense.ndim != 2:
            raise ValueError("expected a 2-d array")
        rows, cols = dense.shape
        nw = _nwords(cols)
        padded = np.zeros((rows, nw * WORD), dtype=bool)
        padded[:, :cols] = dense
        packed = np.packbits(padded, axis=1, bitorder="little")
        words = np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)
        return cls(rows, cols, words.reshape(rows, nw))

    def to_bool(self) -> np.ndarray:
        as_bytes = np.ascontiguousarray(self.words.astype("<u8", copy=False)).view(np.uint8)
        bits = np.unpackbits(as_bytes.reshape(self.rows, 8 * self.words.shape[1]), axis=1, bitorder="little")
        return bits[:, :self.cols].astype(bool)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and np.array_equal(self.words, other.words)

    def __getitem__(self, ij: tuple[int, int]) -> bool:
        i, j = ij
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError("bit index out of range")
        return bool((int(self.words[i, j // WORD]) >> (j % WORD)) & 1)

    def row_indices(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.to_bool_row(i))

    def to_bool_row(self, i: int) -> np.ndarray:
        as_bytes = np.ascontiguousarray(self.words[i].astype("<u8", copy=False)).view(np.uint8)
        return np.unpackbits(as_bytes, bitorder="little")[:self.cols].astype(bool)

    def hex_row(self, i: int) -> str:
        value = int.from_bytes(self.words[i].astype("<u8", copy=False).tobytes(), "little")
        width = max(1, (self.cols + 3) // 4)
        return f"0x{value:0{width}x}"

    def count(self) -> int:
        return int(sum(bin(int(w)).count("1") for w in self.words.ravel()))

    def __or__(self, other: "BitMatrix") -> "BitMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        return BitMatrix(self.rows, self.cols, self.words | other.words)


def _bmm_block(bb: np.ndarray, aw: np.ndarray) -> np.ndarray:
    out = np.zeros((bb.shape[0], aw.shape[1]), dtype=np.uint64)
    if bb.shape[0] == 0 or aw.shape[1] == 0:
        return out
    # drop inner indices no row of this block selects
    used = np.flatnonzero(bb.any(axis=0))
    if used.size == 0:
        return out
    bb = bb[:, used]
    aw = aw[used]
    step = max(1, _CHUNK_BUDGET // max(1, used.size * aw.shape[1]))
    for lo in range(0, bb.shape[0], step):
        sel = bb[lo:lo + step, :, None]
        out[lo:lo + step] = np.bitwise_or.reduce(np.where(sel, aw[None], np.uint64(0)), axis=1)
    return out


def bmm(b: BitMatrix, a: BitMatrix, threads: int = 1) -> BitMatrix:
    """Boolean product: ``C[i, j] = OR_t (B[i, t] AND A[t, j])``."""
    if b.cols != a.rows:
        raise ValueError(f"dimension mismatch: {b.rows}x{b.cols} times {a.rows}x{a.cols}")
    bb = b.to_bool()
    if threads > 1 and b.rows > 1:
        bounds = np.linspace(0, b.rows, min(threads, b.rows) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda k: _bmm_block(bb[bounds[k]:bounds[k + 1]], a.words),
                                  range(len(bounds) - 1)))
        words = np.vstack(parts)
    else:
        words = _bmm_block(bb, a.words)
    return BitMatrix(b.rows, a.cols, words)


def add_identity(a: BitMatrix) -> BitMatrix:
    if a.rows != a.cols:
        raise ValueError("add_identity needs a square matrix")
    return a | BitMatrix.identity(a.rows)


def restrict_rows(a: BitMatrix, s: "SourceSet | Sequence[int]") -> BitMatrix:
    ids = np.asarray(list(s), dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= a.rows):
        raise ValueError("row index out of range")
    return BitMatrix(ids.size, a.cols, a.words[ids].copy())


def transitive_closure(g: "DiGraph", threads: int = 1) -> BitMatrix:
    """Reflexive closure by squaring ``A + I`` up to ``ceil(log2 n)`` times."""
    m = add_identity(g.adjacency())
    rounds = math.ceil(math.log2(g.n)) if g.n > 1 else 0
    for _ in range(rounds):
        nxt = bmm(m, m, threads=threads)
        if nxt == m:
            break
        m = nxt
    return m
