"""Achievable rates for on-off keying over AWGN.

SNR convention: ``gamma = (1 - p0) * A**2 / sigma**2`` with ``p0 = P(X = 0)``.
All rate functions take ``gamma`` in linear units unless the name says dB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect, minimize_scalar

GH_NODES = 64
Q0_BOUNDS = (1e-6, 1.0 - 1e-6)
Q0_XTOL = 1e-6
SNR_SEARCH_DB = (-20.0, 30.0)
SNR_XTOL_DB = 1e-3
H2_INV_TOL = 1e-12


class RateOutOfRangeError(ValueError):
    pass


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def h2(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def h2_inv(y: float, branch: str = "upper") -> float:
    """Inverse binary entropy; ``branch="upper"`` returns p >= 1/2."""
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"entropy {y} outside [0, 1]")
    if branch not in ("upper", "lower"):
        raise ValueError(f"unknown branch {branch!r}")
    if y >= 1.0:
        return 0.5
    lo, hi = (0.5, 1.0) if branch == "upper" else (0.0, 0.5)
    if y <= 0.0:
        return 1.0 if branch == "upper" else 0.0
    # h2 is monotone on each half
    while hi - lo > 1e-16:
        mid = 0.5 * (lo + hi)
        val = h2(mid)
        if abs(val - y) <= H2_INV_TOL:
            return mid
        if (val > y) == (branch == "upper"):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=4)
def _hermite(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.hermite.hermgauss(nodes)
    return t, w / math.sqrt(math.pi)


def mi_binary(q0: float, amplitude: float, sigma: float = 1.0, nodes: int = GH_NODES) -> float:
    """I(X;Y) in bits for X in {0, amplitude} with P(X=0) = q0, Y = X + N(0, sigma^2)."""
    if q0 <= 0.0 or q0 >= 1.0 or amplitude == 0.0:
        return 0.0
    t, w = _hermite(nodes)
    a = amplitude / sigma
    q1 = 1.0 - q0
    y = math.sqrt(2.0) * t  # normalised receive value minus the sent symbol
    # x = 0: log(q0 + q1 exp(a y - a^2/2)); x = A: log(q0 exp(-a y - a^2/2) + q1)
    l0 = np.logaddexp(math.log(q0), math.log(q1) + a * y - 0.5 * a * a)
    l1 = np.logaddexp(math.log(q0) - a * y - 0.5 * a * a, math.log(q1))
    nats = -(q0 * np.dot(w, l0) + q1 * np.dot(w, l1))
    return max(0.0, float(nats) / math.log(2.0))


def amplitude_for(gamma: float, q0: float, sigma: float = 1.0) -> float:
    return sigma * math.sqrt(gamma / (1.0 - q0))


def mi_ook(q0: float, gamma: float) -> float:
    if gamma <= 0.0 or q0 <= 0.0 or q0 >= 1.0:
        return 0.0
    return mi_binary(q0, amplitude_for(gamma, q0))


def capacity_ook(gamma: float) -> Tuple[float, float]:
    """(capacity, optimal q0) at SNR ``gamma``."""
    if gamma <= 0.0:
        return 0.0, 0.5
    res = minimize_scalar(
        lambda q: -mi_ook(q, gamma),
        bounds=Q0_BOUNDS,
        method="bounded",
        options={"xatol": Q0_XTOL},
    )
    q = float(res.x)
    return max(mi_ook(q, gamma), mi_ook(0.5, gamma)), q


@dataclass(frozen=True)
class InputClass:
    fraction: float
    q0: float
    transmitted: bool = True


@dataclass(frozen=True)
class InputSpec:
    classes: Tuple[InputClass, ...]

    def __post_init__(self) -> None:
        total = sum(c.fraction for c in self.classes)
        if not self.classes or abs(total - 1.0) > 1e-9:
            raise ValueError(f"class fractions must sum to 1, got {total}")
        for c in self.classes:
            if not 0.0 <= c.q0 <= 1.0 or c.fraction < 0.0:
                raise ValueError(f"invalid input class {c}")

    @classmethod
    def of(cls, pairs: Sequence[Tuple[float, float]]) -> "InputSpec":
        return cls(classes=tuple(InputClass(float(f), float(q)) for f, q in pairs))


def ts_rate(spec: InputSpec, gamma: float) -> float:
    """Mixture rate per transmitted symbol with a shared amplitude.

    The amplitude is set so that the aggregate transmit distribution meets
    ``gamma``; non-transmitted classes carry neither rate nor energy.
    """
    tx = [c for c in spec.classes if c.transmitted and c.fraction > 0.0]
    total = sum(c.fraction for c in tx)
    if gamma <= 0.0 or total == 0.0:
        return 0.0
    ones = sum(c.fraction * (1.0 - c.q0) for c in tx) / total
    if ones <= 0.0:
        return 0.0
    amp = math.sqrt(gamma / ones)
    return sum(c.fraction * mi_binary(c.q0, amp) for c in tx) / total


def ts_capacity(gamma: float, code_rate: float) -> Tuple[float, float]:
    """Time-sharing rate: ``code_rate`` of the positions shaped (optimised q0), the rest uniform."""
    if not 0.0 < code_rate <= 1.0:
        raise ValueError(f"code rate {code_rate} outside (0, 1]")

    def rate(q: float) -> float:
        return ts_rate(InputSpec.of([(code_rate, q), (1.0 - code_rate, 0.5)]), gamma)

    res = minimize_scalar(lambda q: -rate(q), bounds=Q0_BOUNDS, method="bounded", options={"xatol": Q0_XTOL})
    q = float(res.x)
    return max(rate(q), rate(0.5)), q


def snr_for_rate(
    rate_fn: Callable[[float], float],
    target_rate: float,
    lo_db: float = SNR_SEARCH_DB[0],
    hi_db: float = SNR_SEARCH_DB[1],
) -> float:
    """Smallest SNR in dB at which ``rate_fn(snr_db)`` reaches ``target_rate``."""
    f_lo = rate_fn(lo_db) - target_rate
    f_hi = rate_fn(hi_db) - target_rate
    if f_lo > 0.0 or f_hi < 0.0:
        raise RateOutOfRangeError(f"rate {target_rate} not reachable within [{lo_db}, {hi_db}] dB")
    return float(bisect(lambda s: rate_fn(s) - target_rate, lo_db, hi_db, xtol=SNR_XTOL_DB))


def uniform_rate_db(snr_db: float) -> float:
    return mi_ook(0.5, db_to_linear(snr_db))


def optimal_rate_db(snr_db: float) -> float:
    return capacity_ook(db_to_linear(snr_db))[0]


def parse_classes(text: str) -> InputSpec:
    """``"0.6:0.8,0.4:0.5"`` -> fractions and zero-probabilities."""
    pairs = []
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        frac, q0 = part.split(":", 1)
        pairs.append((float(frac), float(q0)))
    return InputSpec.of(pairs)


def baseline_snr(rate: float, dist: str, code_rate: float = 0.75) -> float:
    """SNR (dB) of the dashed reference lines: uniform, optimal, ts or ``classes=...``."""
    if dist == "uniform":
        return snr_for_rate(uniform_rate_db, rate)
    if dist == "optimal":
        return snr_for_rate(optimal_rate_db, rate)
    if dist == "ts":
        return snr_for_rate(lambda s: ts_capacity(db_to_linear(s), code_rate)[0], rate)
    if dist.startswith("classes="):
        spec = parse_classes(dist[len("classes="):])
        return snr_for_rate(lambda s: ts_rate(spec, db_to_linear(s)), rate)
    raise ValueError(f"unknown distribution {dist!r}")
