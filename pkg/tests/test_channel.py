import math

import numpy as np
import pytest

from channel import ChannelConfig, add_awgn, demap_llr, frame_rng, map_ook, prior_llr
from gf2 import DimensionError


def test_map_ook():
    assert list(map_ook([0, 1, 1, 0])) == [0.0, 1.0, 1.0, 0.0]
    assert list(map_ook([0, 1, 1, 0], puncture_set={1})) == [0.0, 1.0, 0.0]
    assert list(map_ook([1, 0], amplitude=2.5)) == [2.5, 0.0]


def test_snr_convention():
    assert ChannelConfig(amplitude=math.sqrt(2.0), sigma=1.0).snr_db == pytest.approx(0.0, abs=1e-12)
    assert ChannelConfig(amplitude=2.0, sigma=1.0).snr_db == pytest.approx(3.0103, abs=1e-4)
    assert ChannelConfig(amplitude=2.0, sigma=1.0, p0=0.75).snr_db == pytest.approx(0.0, abs=1e-12)


def test_from_snr_round_trip():
    for s in (-3.0, 0.0, 4.5):
        assert ChannelConfig.from_snr(s, 0.7).snr_db == pytest.approx(s)


def test_config_validation():
    with pytest.raises(ValueError):
        ChannelConfig(amplitude=0.0, sigma=1.0)
    with pytest.raises(ValueError):
        ChannelConfig(amplitude=1.0, sigma=1.0, p0=1.0)


def test_awgn_statistics():
    x = np.zeros(1_000_000)
    assert np.array_equal(add_awgn(x, 0.0, np.random.default_rng(0)), x)
    y = add_awgn(x, 0.5, np.random.default_rng(1))
    assert abs(y.mean()) < 5 * 0.5 / 1000
    assert y.var() == pytest.approx(0.25, rel=0.01)
    with pytest.raises(ValueError):
        add_awgn(x, -1.0, np.random.default_rng(0))


def test_demap_reference_values():
    cfg = ChannelConfig(amplitude=2.0, sigma=1.0)
    assert demap_llr([1.0], cfg, ["dm"])[0] == pytest.approx(0.0)
    assert demap_llr([0.0], cfg, ["dm"])[0] == pytest.approx(2.0)
    two = demap_llr([0.0, 1.0], cfg, ["dm", "dm"])
    assert two[1] - two[0] == pytest.approx(-2.0)


def test_demap_adds_class_priors():
    cfg = ChannelConfig(amplitude=2.0, sigma=1.0, priors={"parity": 0.75})
    out = demap_llr([1.0, 1.0], cfg, ["dm", "parity"])
    assert out[0] == pytest.approx(0.0)
    assert out[1] == pytest.approx(math.log(3.0))


def test_demap_punctured_positions():
    cfg = ChannelConfig(amplitude=2.0, sigma=1.0, priors={"shaping": 0.9})
    out = demap_llr([0.0], cfg, ["dm", "punctured"], puncture_set={1})
    assert out[0] == pytest.approx(2.0)
    assert out[1] == 0.0


def test_demap_punctured_positions_keep_class_prior():
    cfg = ChannelConfig(amplitude=2.0, sigma=1.0, priors={"dm": 0.75, "parity": 0.2})
    out = demap_llr([0.0, 1.0], cfg, ["dm", "dm", "parity", "punctured"], puncture_set={1, 3})
    assert out[0] == pytest.approx(2.0 + math.log(3.0))
    assert out[1] == pytest.approx(math.log(3.0))
    assert out[2] == pytest.approx(math.log(0.25))
    assert out[3] == 0.0
    with pytest.raises(DimensionError):
        demap_llr([0.0, 1.0], cfg, ["dm", "shaping"], puncture_set={1})


def test_noiseless_hard_decisions():
    bits = np.array([0, 1, 1, 0, 1])
    cfg = ChannelConfig(amplitude=10.0, sigma=1.0)
    llr = demap_llr(map_ook(bits, amplitude=10.0), cfg, ["dm"] * 5)
    assert list((llr < 0).astype(int)) == list(bits)


def test_prior_llr_is_clamped():
    assert prior_llr(0.5) == 0.0
    assert math.isfinite(prior_llr(1.0)) and prior_llr(1.0) > 0


def test_frame_rng_streams():
    a = frame_rng(1, 2, 3).random(4)
    assert np.array_equal(a, frame_rng(1, 2, 3).random(4))
    assert not np.array_equal(a, frame_rng(1, 2, 4).random(4))
