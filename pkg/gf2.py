"""Dense and sparse GF(2) linear algebra.

Dense matrices are bit-packed row-major (``numpy.packbits``, big bit order) so
row additions during elimination are a single XOR over packed bytes. Sparse
matrices keep both adjacency directions for Tanner-graph style access.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix


class DimensionError(ValueError):
    pass


class StructuralError(ValueError):
    pass


def _as_bits(v: Iterable[int]) -> np.ndarray:
    arr = np.asarray(v, dtype=np.uint8).reshape(-1)
    if arr.size and arr.max() > 1:
        raise ValueError("bit vector entries must be 0 or 1")
    return arr


def _column_bits(packed: np.ndarray, c: int) -> np.ndarray:
    return (packed[:, c >> 3] >> (7 - (c & 7))) & 1


@dataclass(frozen=True, eq=False)
class BinMatrix:
    rows: int
    cols: int
    data: np.ndarray  # uint8, shape (rows, ceil(cols / 8))

    def __post_init__(self) -> None:
        expected = (self.rows, (self.cols + 7) // 8)
        if self.data.shape != expected:
            raise DimensionError(f"packed data has shape {self.data.shape}, expected {expected}")
        self.data.setflags(write=False)

    @classmethod
    def from_dense(cls, a) -> "BinMatrix":
        arr = np.asarray(a, dtype=np.uint8)
        if arr.ndim != 2:
            raise DimensionError("dense matrix must be 2-D")
        rows, cols = arr.shape
        data = np.packbits(arr & 1, axis=1) if cols else np.zeros((rows, 0), dtype=np.uint8)
        return cls(rows=rows, cols=cols, data=np.ascontiguousarray(data))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BinMatrix":
        return cls(rows=rows, cols=cols, data=np.zeros((rows, (cols + 7) // 8), dtype=np.uint8))

    def to_dense(self) -> np.ndarray:
        if self.cols == 0:
            return np.zeros((self.rows, 0), dtype=np.uint8)
        return np.unpackbits(self.data, axis=1, count=self.cols)

    def get(self, r: int, c: int) -> int:
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise IndexError(f"entry ({r}, {c}) outside {self.rows}x{self.cols} matrix")
        return int((self.data[r, c >> 3] >> (7 - (c & 7))) & 1)

    def row(self, r: int) -> np.ndarray:
        if not 0 <= r < self.rows:
            raise IndexError(f"row {r} outside {self.rows}x{self.cols} matrix")
        return np.unpackbits(self.data[r], count=self.cols)

    def column(self, c: int) -> np.ndarray:
        if not 0 <= c < self.cols:
            raise IndexError(f"column {c} outside {self.rows}x{self.cols} matrix")
        return _column_bits(self.data, c).astype(np.uint8)

    def vec_mul(self, u: Sequence[int]) -> np.ndarray:
        """Row-vector product ``u · M`` over GF(2)."""
        bits = _as_bits(u)
        if bits.size != self.rows:
            raise DimensionError(f"vector of length {bits.size} cannot multiply {self.rows}x{self.cols} matrix")
        picked = self.data[bits.astype(bool)]
        if picked.shape[0] == 0:
            return np.zeros(self.cols, dtype=np.uint8)
        return np.unpackbits(np.bitwise_xor.reduce(picked, axis=0), count=self.cols)


@dataclass(frozen=True, eq=False)
class SparseBinMatrix:
    rows: int
    cols: int
    row_adj: Tuple[np.ndarray, ...]
    col_adj: Tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if len(self.row_adj) != self.rows or len(self.col_adj) != self.cols:
            raise DimensionError("adjacency list count does not match matrix shape")
        for lists, bound in ((self.row_adj, self.cols), (self.col_adj, self.rows)):
            for idx in lists:
                if idx.size and (idx[0] < 0 or idx[-1] >= bound or np.any(np.diff(idx) <= 0)):
                    raise StructuralError("adjacency indices must be strictly increasing and in range")
        if self.nnz != sum(int(c.size) for c in self.col_adj):
            raise StructuralError("row and column adjacency disagree")
        for r, idx in enumerate(self.row_adj):
            for c in idx:
                pos = np.searchsorted(self.col_adj[c], r)
                if pos >= self.col_adj[c].size or self.col_adj[c][pos] != r:
                    raise StructuralError(f"entry ({r}, {int(c)}) missing from column adjacency")

    @classmethod
    def from_row_adj(cls, rows: int, cols: int, row_adj: Sequence[Iterable[int]]) -> "SparseBinMatrix":
        rlists: List[np.ndarray] = []
        cbuckets: List[List[int]] = [[] for _ in range(cols)]
        for r, idx in enumerate(row_adj):
            arr = np.unique(np.asarray(list(idx), dtype=np.int64))
            if arr.size and (arr[0] < 0 or arr[-1] >= cols):
                raise IndexError(f"row {r} references a column outside [0, {cols})")
            rlists.append(arr)
            for c in arr:
                cbuckets[c].append(r)
        clists = tuple(np.asarray(b, dtype=np.int64) for b in cbuckets)
        return cls(rows=rows, cols=cols, row_adj=tuple(rlists), col_adj=clists)

    @classmethod
    def from_dense(cls, a) -> "SparseBinMatrix":
        arr = np.asarray(a, dtype=np.uint8)
        if arr.ndim != 2:
            raise DimensionError("dense matrix must be 2-D")
        return cls.from_row_adj(arr.shape[0], arr.shape[1], [np.flatnonzero(row & 1) for row in arr])

    @property
    def nnz(self) -> int:
        return sum(int(r.size) for r in self.row_adj)

    def row_weights(self) -> np.ndarray:
        return np.array([r.size for r in self.row_adj], dtype=np.int64)

    def col_weights(self) -> np.ndarray:
        return np.array([c.size for c in self.col_adj], dtype=np.int64)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=np.uint8)
        for r, idx in enumerate(self.row_adj):
            out[r, idx] = 1
        return out

    def to_csr(self) -> csr_matrix:
        indptr = np.concatenate(([0], np.cumsum(self.row_weights())))
        indices = np.concatenate(self.row_adj) if self.rows else np.zeros(0, dtype=np.int64)
        return csr_matrix((np.ones(indices.size, dtype=np.int64), indices, indptr), shape=(self.rows, self.cols))

    def edges(self) -> Tuple[np.ndarray, np.ndarray]:
        """(row, column) index arrays of all ones, grouped by row."""
        rows = np.repeat(np.arange(self.rows, dtype=np.int64), self.row_weights())
        cols = np.concatenate(self.row_adj) if self.rows else np.zeros(0, dtype=np.int64)
        return rows, cols.astype(np.int64)

    def permute_columns(self, perm: Sequence[int]) -> "SparseBinMatrix":
        """Column j of the result is column ``perm[j]`` of this matrix."""
        inv = inverse_permutation(perm)
        if inv.size != self.cols:
            raise DimensionError("permutation length must equal the column count")
        return SparseBinMatrix.from_row_adj(self.rows, self.cols, [inv[idx] for idx in self.row_adj])


def inverse_permutation(perm: Sequence[int]) -> np.ndarray:
    p = np.asarray(perm, dtype=np.int64)
    inv = np.empty_like(p)
    inv[p] = np.arange(p.size, dtype=np.int64)
    if not np.array_equal(np.sort(p), np.arange(p.size)):
        raise ValueError("not a permutation")
    return inv


def _packed(m) -> Tuple[np.ndarray, int]:
    if isinstance(m, BinMatrix):
        return m.data.copy(), m.cols
    if isinstance(m, SparseBinMatrix):
        return BinMatrix.from_dense(m.to_dense()).data.copy(), m.cols
    dense = BinMatrix.from_dense(m)
    return dense.data.copy(), dense.cols


def _rref(work: np.ndarray, columns: Iterable[int]) -> Tuple[np.ndarray, List[int]]:
    # Gauss-Jordan on packed rows, pivoting on `columns` in the given order.
    r = 0
    pivots: List[int] = []
    n_rows = work.shape[0]
    for c in columns:
        if r == n_rows:
            break
        cand = np.flatnonzero(_column_bits(work[r:], c))
        if cand.size == 0:
            continue
        p = r + int(cand[0])
        if p != r:
            work[[r, p]] = work[[p, r]]
        hits = _column_bits(work, c).astype(bool)
        hits[r] = False
        work[hits] ^= work[r]
        pivots.append(c)
        r += 1
    return work[:r], pivots


def rank(m) -> int:
    work, cols = _packed(m)
    _, pivots = _rref(work, range(cols))
    return len(pivots)


def systematic_form(h: SparseBinMatrix) -> Tuple[np.ndarray, BinMatrix, SparseBinMatrix]:
    """Derive ``G_sys = [I | G_p]`` from a parity-check matrix.

    Returns ``(perm, g_sys, h_perm)`` where column j of ``h_perm`` is column
    ``perm[j]`` of ``h`` and ``h_perm · g_sysᵀ = 0``. Redundant rows of ``h``
    are tolerated. The identity permutation is used whenever the trailing
    ``rank(h)`` columns are independent; otherwise pivots are the
    lowest-index eligible columns and move to the parity block.
    """
    work, n = _packed(h)
    _, pivots = _rref(work.copy(), range(n))
    m = len(pivots)
    if m == 0:
        raise StructuralError("parity-check matrix has rank 0")
    if m == n:
        raise StructuralError("parity-check matrix has full column rank; code dimension is 0")

    _, tail = _rref(work.copy(), range(n - m, n))
    if len(tail) == m:
        perm = np.arange(n, dtype=np.int64)
    else:
        piv = set(pivots)
        perm = np.array([c for c in range(n) if c not in piv] + sorted(piv), dtype=np.int64)

    k = n - m
    h_perm = h.permute_columns(perm)
    reduced, got = _rref(_packed(h_perm)[0], range(k, n))
    if len(got) != m:
        raise StructuralError("parity block is singular after permutation")
    # reduced rows now read [A | I_m] with row i pivoting on column k + i
    a_block = np.unpackbits(reduced, axis=1, count=n)[:, :k]
    g_dense = np.concatenate([np.eye(k, dtype=np.uint8), a_block.T.astype(np.uint8)], axis=1)
    return perm, BinMatrix.from_dense(g_dense), h_perm


def mat_vec_mul_gf2(m: SparseBinMatrix, v: Sequence[int]) -> np.ndarray:
    bits = _as_bits(v)
    if bits.size != m.cols:
        raise DimensionError(f"vector of length {bits.size} cannot multiply {m.rows}x{m.cols} matrix")
    return (np.asarray(m.to_csr() @ bits.astype(np.int64)) % 2).astype(np.uint8)


def weight_profile(weights: Iterable[int]) -> List[Tuple[int, int]]:
    """(weight, count) pairs in increasing weight order."""
    vals, counts = np.unique(np.asarray(list(weights), dtype=np.int64), return_counts=True)
    return [(int(w), int(c)) for w, c in zip(vals, counts)]


def null_check(h: SparseBinMatrix, g: BinMatrix, perm: Optional[Sequence[int]] = None) -> bool:
    """True iff every row of ``g`` (systematic order when ``perm`` given) is a codeword of ``h``."""
    hp = h if perm is None else h.permute_columns(perm)
    prod = (hp.to_csr() @ g.to_dense().T.astype(np.int64)) % 2
    return not np.any(prod)
