import math

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.stats import norm

from rates import (
    InputSpec,
    RateOutOfRangeError,
    baseline_snr,
    capacity_ook,
    db_to_linear,
    h2,
    h2_inv,
    mi_binary,
    mi_ook,
    optimal_rate_db,
    parse_classes,
    snr_for_rate,
    ts_capacity,
    ts_rate,
    uniform_rate_db,
)


def _mi_trapezoid(q0: float, amplitude: float, sigma: float = 1.0) -> float:
    y = np.linspace(-12.0 * sigma, amplitude + 12.0 * sigma, 40001)
    p0 = norm.pdf(y, 0.0, sigma)
    p1 = norm.pdf(y, amplitude, sigma)
    py = q0 * p0 + (1.0 - q0) * p1
    with np.errstate(divide="ignore", invalid="ignore"):
        t0 = np.where(p0 > 0, p0 * np.log2(p0 / py), 0.0)
        t1 = np.where(p1 > 0, p1 * np.log2(p1 / py), 0.0)
    return q0 * trapezoid(t0, y) + (1.0 - q0) * trapezoid(t1, y)


def test_binary_entropy():
    assert h2(0.5) == 1.0
    assert h2(0.0) == 0.0 and h2(1.0) == 0.0
    assert h2(0.11) == pytest.approx(0.5, abs=1e-3)


def test_binary_entropy_inverse():
    assert h2_inv(1.0) == 0.5
    assert h2_inv(0.0) == 1.0
    assert h2_inv(0.0, branch="lower") == 0.0
    assert h2_inv(0.5) == pytest.approx(0.8900, abs=1e-4)
    assert h2_inv(0.5, branch="lower") == pytest.approx(0.1100, abs=1e-4)
    for y in (0.1, 0.37, 0.9):
        assert h2(h2_inv(y)) == pytest.approx(y, abs=1e-10)
    with pytest.raises(ValueError):
        h2_inv(1.5)


@pytest.mark.parametrize("q0", [0.5, 0.75])
@pytest.mark.parametrize("gamma_db", [0.0, 5.0])
def test_quadrature_matches_trapezoid(q0, gamma_db):
    amp = math.sqrt(db_to_linear(gamma_db) / (1.0 - q0))
    assert mi_binary(q0, amp) == pytest.approx(_mi_trapezoid(q0, amp), abs=1e-4)


def test_mutual_information_limits():
    assert mi_ook(0.5, 1e-8) < 1e-6
    assert mi_ook(0.3, 1e4) == pytest.approx(h2(0.3), abs=1e-6)
    assert mi_ook(0.5, 0.0) == 0.0


def test_mutual_information_bounds_and_monotonicity():
    gammas = [db_to_linear(s) for s in np.arange(-10.0, 10.0, 2.5)]
    for q0 in (0.2, 0.5, 0.8):
        vals = [mi_ook(q0, g) for g in gammas]
        assert all(0.0 <= v <= h2(q0) + 1e-9 for v in vals)
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_capacity_dominates_fixed_inputs():
    for s in (-5.0, 0.0, 5.0, 10.0):
        gamma = db_to_linear(s)
        cap, q = capacity_ook(gamma)
        assert 0.0 < q < 1.0
        for q0 in (0.3, 0.5, 0.7, 0.9):
            assert cap >= mi_ook(q0, gamma) - 1e-9


@pytest.mark.parametrize(
    "rate, dist, expected",
    [
        (2 / 3, "uniform", 5.32),
        (2 / 3, "optimal", 4.34),
        (2 / 3, "ts", 4.66),
        (1 / 3, "uniform", 0.755),
        (1 / 3, "optimal", -1.05),
    ],
)
def test_reference_snr_lines(rate, dist, expected):
    assert baseline_snr(rate, dist) == pytest.approx(expected, abs=0.05)


def test_time_sharing_lies_between_references():
    uni = snr_for_rate(uniform_rate_db, 2 / 3)
    opt = snr_for_rate(optimal_rate_db, 2 / 3)
    ts = baseline_snr(2 / 3, "ts", code_rate=2 / 3)
    assert opt - 0.02 <= ts <= uni + 0.02
    assert opt < baseline_snr(2 / 3, "ts", code_rate=0.75) < uni


def test_ts_capacity_never_below_uniform():
    gamma = db_to_linear(4.0)
    rate, q = ts_capacity(gamma, 0.75)
    assert rate >= mi_ook(0.5, gamma) - 1e-9
    assert rate <= capacity_ook(gamma)[0] + 1e-6


def test_single_class_mixture_is_plain_ook():
    gamma = db_to_linear(3.0)
    assert ts_rate(InputSpec.of([(1.0, 0.5)]), gamma) == pytest.approx(mi_ook(0.5, gamma))


def test_identical_classes_collapse_to_plain_ook():
    gamma = db_to_linear(3.0)
    spec = parse_classes("0.5:0.5,0.5:0.5")
    assert ts_rate(spec, gamma) == pytest.approx(mi_ook(0.5, gamma))
    with pytest.raises(ValueError):
        parse_classes("0.5:0.5,0.2:0.5")


def test_unreachable_rate():
    with pytest.raises(RateOutOfRangeError):
        snr_for_rate(uniform_rate_db, 1.5)


def test_unknown_distribution():
    with pytest.raises(ValueError):
        baseline_snr(0.5, "gaussian")
