"""Constant-composition distribution matcher by exact lexicographic ranking.

Sequences of length ``n_out`` with exactly ``n_ones`` ones are ordered
lexicographically with 0 < 1; a ``k_in``-bit message (MSB first) is read as an
index into that order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Optional, Sequence

import numpy as np

from rates import h2


class CompositionError(ValueError):
    pass


class OutOfCodebookError(ValueError):
    pass


@dataclass(frozen=True)
class Composition:
    n_out: int
    n_ones: int

    def __post_init__(self) -> None:
        if self.n_out < 0 or not 0 <= self.n_ones <= self.n_out:
            raise CompositionError(f"invalid composition ({self.n_out}, {self.n_ones})")

    @property
    def p0(self) -> float:
        return 1.0 - self.n_ones / self.n_out if self.n_out else 1.0


@dataclass(frozen=True)
class DmCodebook:
    comp: Composition
    k_in: Optional[int] = None

    def __post_init__(self) -> None:
        full = self.size.bit_length() - 1
        if self.k_in is None:
            object.__setattr__(self, "k_in", full)
        elif not 0 <= self.k_in <= full:
            raise CompositionError(
                f"k_in={self.k_in} needs 2^{self.k_in} sequences; composition {self.comp} has {self.size}"
            )

    @cached_property
    def size(self) -> int:
        return math.comb(self.comp.n_out, self.comp.n_ones)

    @property
    def rate(self) -> float:
        return self.k_in / self.comp.n_out if self.comp.n_out else 0.0

    @property
    def rate_loss(self) -> float:
        if not self.comp.n_out:
            return 0.0
        return h2(self.comp.n_ones / self.comp.n_out) - self.rate


def choose_composition(n_out: int, target_p0: float) -> Composition:
    if not 0.0 < target_p0 < 1.0:
        raise CompositionError(f"target_p0 must lie in (0, 1), got {target_p0}")
    ones = int(math.floor(n_out * (1.0 - target_p0) + 0.5))
    return Composition(n_out=n_out, n_ones=min(max(ones, 0), n_out))


def codebook_for(n_out: int, target_p0: float, k_in: Optional[int] = None) -> DmCodebook:
    return DmCodebook(comp=choose_composition(n_out, target_p0), k_in=k_in)


def bits_to_int(bits: Sequence[int]) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | (int(b) & 1)
    return value


def int_to_bits(value: int, width: int) -> np.ndarray:
    if width == 0:
        return np.zeros(0, dtype=np.uint8)
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def unrank(comp: Composition, index: int) -> np.ndarray:
    n, w = comp.n_out, comp.n_ones
    out = np.zeros(n, dtype=np.uint8)
    count = math.comb(n, w)  # sequences sharing the prefix placed so far
    for i in range(n):
        rem = n - i
        zeros_first = count * (rem - w) // rem
        if index < zeros_first:
            count = zeros_first
        else:
            out[i] = 1
            index -= zeros_first
            count = count * w // rem
            w -= 1
    return out


def rank(comp: Composition, seq: Sequence[int]) -> int:
    bits = np.asarray(seq, dtype=np.uint8).reshape(-1)
    if bits.size != comp.n_out:
        raise CompositionError(f"sequence has length {bits.size}, composition expects {comp.n_out}")
    if int(bits.sum()) != comp.n_ones:
        raise CompositionError(f"sequence has weight {int(bits.sum())}, composition expects {comp.n_ones}")
    n, w = comp.n_out, comp.n_ones
    count = math.comb(n, w)
    index = 0
    for i in range(n):
        rem = n - i
        zeros_first = count * (rem - w) // rem
        if bits[i]:
            index += zeros_first
            count = count * w // rem
            w -= 1
        else:
            count = zeros_first
    return index


def dm_match(cb: DmCodebook, msg: Sequence[int]) -> np.ndarray:
    bits = np.asarray(msg, dtype=np.uint8).reshape(-1)
    if bits.size != cb.k_in:
        raise CompositionError(f"message has {bits.size} bits, codebook takes {cb.k_in}")
    return unrank(cb.comp, bits_to_int(bits))


def dm_dematch(cb: DmCodebook, seq: Sequence[int]) -> np.ndarray:
    index = rank(cb.comp, seq)
    if index >= 1 << cb.k_in:
        raise OutOfCodebookError(f"sequence rank {index} is outside the {1 << cb.k_in}-entry codebook")
    return int_to_bits(index, cb.k_in)


# Largest n_out whose binomials all fit in int64
BATCH_MAX_N = 62


@lru_cache(maxsize=16)
def _comb_table(n: int) -> np.ndarray:
    table = np.zeros((n + 1, n + 1), dtype=np.int64)
    for r in range(n + 1):
        for k in range(r + 1):
            table[r, k] = math.comb(r, k)
    return table


def _rows(data, width: int, what: str) -> np.ndarray:
    bits = np.atleast_2d(np.asarray(data, dtype=np.uint8))
    if bits.ndim != 2 or bits.shape[1] != width:
        raise CompositionError(f"{what} rows have shape {bits.shape[1:]}, expected length {width}")
    return bits


def unrank_many(comp: Composition, indices: Sequence[int]) -> np.ndarray:
    """Row-wise ``unrank`` over an index array; one sequence per row."""
    n = comp.n_out
    if n > BATCH_MAX_N:
        return np.array([unrank(comp, int(i)) for i in indices], dtype=np.uint8).reshape(-1, n)
    idx = np.array(indices, dtype=np.int64).reshape(-1)
    table = _comb_table(n)
    w = np.full(idx.size, comp.n_ones, dtype=np.int64)
    out = np.zeros((idx.size, n), dtype=np.uint8)
    for i in range(n):
        # sequences that put a 0 here: C(remaining - 1, ones left)
        zeros_first = table[n - i - 1, w]
        one = idx >= zeros_first
        out[:, i] = one
        idx -= np.where(one, zeros_first, 0)
        w -= one
    return out


def rank_many(comp: Composition, seqs: np.ndarray) -> np.ndarray:
    bits = _rows(seqs, comp.n_out, "sequence")
    weights = bits.sum(axis=1, dtype=np.int64)
    if np.any(weights != comp.n_ones):
        bad = int(weights[weights != comp.n_ones][0])
        raise CompositionError(f"sequence has weight {bad}, composition expects {comp.n_ones}")
    n = comp.n_out
    if n > BATCH_MAX_N:
        return np.array([rank(comp, row) for row in bits], dtype=object)
    table = _comb_table(n)
    w = np.full(bits.shape[0], comp.n_ones, dtype=np.int64)
    idx = np.zeros(bits.shape[0], dtype=np.int64)
    for i in range(n):
        one = bits[:, i].astype(bool)
        idx += np.where(one, table[n - i - 1, w], 0)
        w -= one
    return idx


def dm_match_many(cb: DmCodebook, msgs: np.ndarray) -> np.ndarray:
    """``dm_match`` over the rows of a ``(frames, k_in)`` bit array."""
    bits = _rows(msgs, cb.k_in, "message")
    if cb.k_in > BATCH_MAX_N:
        return np.array([dm_match(cb, row) for row in bits], dtype=np.uint8).reshape(-1, cb.comp.n_out)
    weights = np.left_shift(np.int64(1), np.arange(cb.k_in - 1, -1, -1, dtype=np.int64))
    return unrank_many(cb.comp, bits.astype(np.int64) @ weights)


def dm_dematch_many(cb: DmCodebook, seqs: np.ndarray) -> np.ndarray:
    idx = rank_many(cb.comp, seqs)
    if cb.k_in > BATCH_MAX_N:
        return np.array([dm_dematch(cb, row) for row in _rows(seqs, cb.comp.n_out, "sequence")], dtype=np.uint8)
    over = idx >= (1 << cb.k_in)
    if np.any(over):
        raise OutOfCodebookError(f"sequence rank {int(idx[over][0])} is outside the {1 << cb.k_in}-entry codebook")
    shifts = np.arange(cb.k_in - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8)
