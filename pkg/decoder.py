"""Flooding sum-product decoder on the parity-check Tanner graph."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from gf2 import DimensionError, SparseBinMatrix, mat_vec_mul_gf2

DEFAULT_MAX_ITER = 100
MESSAGE_CLAMP = 30.0
_ATANH_LIMIT = 1.0 - 1e-15


@dataclass(frozen=True, eq=False)
class DecodeResult:
    hard_bits: np.ndarray
    iterations_used: int
    converged: bool
    llr_app: np.ndarray


def _extrinsic_products(t: np.ndarray, starts: np.ndarray, group: np.ndarray) -> np.ndarray:
    # product over each group of t, leaving out the edge itself
    zero = t == 0.0
    mag = np.where(zero, 1.0, np.abs(t))
    log_mag = np.log(mag)
    neg = (t < 0.0).astype(np.int64)
    g_log = np.add.reduceat(log_mag, starts)
    g_neg = np.add.reduceat(neg, starts)
    g_zero = np.add.reduceat(zero.astype(np.int64), starts)
    other_zero = g_zero[group] - zero
    sign = 1.0 - 2.0 * ((g_neg[group] - neg) & 1)
    prod = sign * np.exp(g_log[group] - log_mag)
    prod[other_zero > 0] = 0.0
    return prod


def _tanh_rule(v2c: np.ndarray, starts: np.ndarray, group: np.ndarray, clamp: float) -> np.ndarray:
    t = np.tanh(np.clip(v2c, -clamp, clamp) / 2.0)
    prod = np.clip(_extrinsic_products(t, starts, group), -_ATANH_LIMIT, _ATANH_LIMIT)
    return np.clip(2.0 * np.arctanh(prod), -clamp, clamp)


def check_node_update(values: Sequence[float], clamp: float = MESSAGE_CLAMP) -> np.ndarray:
    """Outgoing message on every edge of a single check node."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size == 0:
        return v
    return _tanh_rule(v, np.array([0]), np.zeros(v.size, dtype=np.int64), clamp)


def syndrome_check(h: SparseBinMatrix, bits: Sequence[int]) -> bool:
    return not np.any(mat_vec_mul_gf2(h, bits))


class BpDecoder:
    def __init__(self, h: SparseBinMatrix, max_iter: int = DEFAULT_MAX_ITER, clamp: float = MESSAGE_CLAMP):
        if max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {max_iter}")
        self.h = h
        self.max_iter = max_iter
        self.clamp = clamp
        self._csr = h.to_csr()
        rows, self._cols = h.edges()
        # empty rows carry no edges and are dropped from the grouping
        _, self._group = np.unique(rows, return_inverse=True)
        self._starts = np.flatnonzero(np.r_[True, np.diff(rows) != 0]) if rows.size else np.zeros(0, dtype=np.int64)

    def _syndrome_zero(self, hard: np.ndarray) -> bool:
        return not np.any((self._csr @ hard.astype(np.int64)) & 1)

    def decode(self, llr: Sequence[float]) -> DecodeResult:
        ch = np.clip(np.asarray(llr, dtype=float).reshape(-1), -self.clamp, self.clamp)
        n = self.h.cols
        if ch.size != n:
            raise DimensionError(f"got {ch.size} LLRs for a code of length {n}")
        if self._cols.size == 0:
            hard = (ch < 0).astype(np.uint8)
            return DecodeResult(hard, 1, bool(np.all(ch != 0)), ch.copy())

        v2c = ch[self._cols]
        app, hard = ch, (ch < 0).astype(np.uint8)
        iteration = 0
        for iteration in range(1, self.max_iter + 1):
            c2v = _tanh_rule(v2c, self._starts, self._group, self.clamp)
            app = ch + np.bincount(self._cols, weights=c2v, minlength=n)
            hard = (app < 0).astype(np.uint8)
            if self._syndrome_zero(hard) and np.all(app != 0):
                return DecodeResult(hard, iteration, True, app)
            v2c = np.clip(app[self._cols] - c2v, -self.clamp, self.clamp)
        return DecodeResult(hard, iteration, False, app)


def bp_decode(h: SparseBinMatrix, llr: Sequence[float], max_iter: int = DEFAULT_MAX_ITER) -> DecodeResult:
    return BpDecoder(h, max_iter=max_iter).decode(llr)
