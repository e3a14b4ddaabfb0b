from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence

import numpy as np

from gf2 import DimensionError

# Zero-probabilities are clamped away from 0 and 1 before taking logs
PRIOR_EPS = 1e-12
DEFAULT_PRIOR = 0.5


@dataclass(frozen=True)
class ChannelConfig:
    amplitude: float
    sigma: float
    p0: float = 0.5  # zero-fraction of transmitted symbols, for power accounting
    priors: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.amplitude <= 0.0 or self.sigma <= 0.0:
            raise ValueError(f"amplitude and sigma must be positive, got A={self.amplitude}, sigma={self.sigma}")
        if not 0.0 <= self.p0 < 1.0:
            raise ValueError(f"p0 must lie in [0, 1), got {self.p0}")

    @property
    def gamma(self) -> float:
        return (1.0 - self.p0) * self.amplitude ** 2 / self.sigma ** 2

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.gamma)

    @classmethod
    def from_snr(
        cls,
        snr_db: float,
        p0: float,
        amplitude: float = 1.0,
        priors: Optional[Mapping[str, float]] = None,
    ) -> "ChannelConfig":
        """Fix the amplitude and derive sigma from ``gamma = (1-p0) A^2 / sigma^2``."""
        gamma = 10.0 ** (snr_db / 10.0)
        sigma = amplitude * math.sqrt((1.0 - p0) / gamma)
        return cls(amplitude=amplitude, sigma=sigma, p0=p0, priors=dict(priors or {}))

    def prior(self, cls_name: str) -> float:
        return float(self.priors.get(cls_name, DEFAULT_PRIOR))


def snr_from_config(cfg: ChannelConfig) -> float:
    return cfg.snr_db


def _transmitted_mask(n: int, puncture_set: Iterable[int]) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    punct = list(puncture_set)
    if punct:
        mask[punct] = False
    return mask


def map_ook(bits: Sequence[int], puncture_set: Iterable[int] = (), amplitude: float = 1.0) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.uint8).reshape(-1)
    return arr[_transmitted_mask(arr.size, puncture_set)].astype(float) * amplitude


def add_awgn(signal: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    if sigma < 0.0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    x = np.asarray(signal, dtype=float)
    if sigma == 0.0:
        return x.copy()
    return x + rng.normal(0.0, sigma, size=x.shape)


def prior_llr(q0: float) -> float:
    q = min(max(q0, PRIOR_EPS), 1.0 - PRIOR_EPS)
    return math.log(q / (1.0 - q))


def demap_llr(
    y: Sequence[float],
    cfg: ChannelConfig,
    vn_classes: Sequence[str],
    puncture_set: Iterable[int] = (),
) -> np.ndarray:
    """Channel LLRs in codeword order, priors folded in per position class.

    Punctured positions carry their class prior alone.
    """
    classes = np.asarray(vn_classes, dtype=object)
    mask = _transmitted_mask(classes.size, puncture_set)
    obs = np.asarray(y, dtype=float).reshape(-1)
    if obs.size != int(mask.sum()):
        raise DimensionError(f"received {obs.size} samples, expected {int(mask.sum())} transmitted positions")

    table: Dict[str, float] = {c: prior_llr(cfg.prior(c)) for c in set(classes.tolist())}
    priors = np.array([table[c] for c in classes], dtype=float)
    a, s2 = cfg.amplitude, cfg.sigma ** 2
    out = priors.copy()
    out[mask] += (a * a - 2.0 * a * obs) / (2.0 * s2)
    return out


def frame_rng(seed: int, point: int, frame: int) -> np.random.Generator:
    """Independent stream per (campaign seed, SNR point, frame index)."""
    return np.random.default_rng([seed, point, frame])
