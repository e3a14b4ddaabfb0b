import numpy as np
import pytest

from codes import encode_systematic
from decoder import BpDecoder, bp_decode, check_node_update, syndrome_check
from gf2 import DimensionError


def test_noiseless_codeword(example_code):
    c = encode_systematic(example_code, [0, 0, 1, 0, 1, 0])
    res = bp_decode(example_code.h, 40.0 * (1.0 - 2.0 * c))
    assert res.converged
    assert res.iterations_used <= 1
    assert np.array_equal(res.hard_bits, c)
    assert res.llr_app.shape == (9,)


def test_single_erasure_is_filled(example_code):
    llr = np.full(9, 40.0)
    llr[0] = 0.0
    res = bp_decode(example_code.h, llr)
    assert res.converged
    assert not res.hard_bits.any()
    assert res.llr_app[0] > 0


def test_all_zero_llrs_do_not_converge(example_code):
    res = BpDecoder(example_code.h, max_iter=7).decode(np.zeros(9))
    assert not res.converged
    assert res.iterations_used == 7
    assert not res.hard_bits.any()


def test_syndrome_check(example_code):
    c = encode_systematic(example_code, [1, 0, 1, 1, 0, 0])
    assert syndrome_check(example_code.h, c)
    assert syndrome_check(example_code.h, np.zeros(9, dtype=np.uint8))
    for i in range(9):
        flipped = c.copy()
        flipped[i] ^= 1
        assert not syndrome_check(example_code.h, flipped)


def test_degree_two_check_passes_messages_through():
    out = check_node_update([1.5, -2.0])
    assert list(out) == pytest.approx([-2.0, 1.5], abs=1e-9)


def test_check_node_signs_and_zero():
    out = check_node_update([1.0, -1.0, 2.0])
    assert out[0] < 0 and out[1] > 0 and out[2] < 0
    assert check_node_update([0.0, 3.0, 3.0])[0] != 0.0
    assert check_node_update([0.0, 3.0, 3.0])[1] == 0.0


def test_codeword_symmetry(random_code):
    rng = np.random.default_rng(12)
    code = random_code(rng, 24, 10)
    decoder = BpDecoder(code.h, max_iter=30)
    llr = 1.2 + rng.normal(0.0, 1.5, size=code.n_c)
    c = encode_systematic(code, rng.integers(0, 2, size=code.k_c))
    base = decoder.decode(llr)
    flipped = decoder.decode(llr * (1.0 - 2.0 * c))
    assert np.array_equal(flipped.hard_bits, base.hard_bits ^ c)
    assert flipped.iterations_used == base.iterations_used
    assert flipped.converged == base.converged


def test_convergence_is_monotone_in_iterations(random_code):
    rng = np.random.default_rng(21)
    code = random_code(rng, 30, 12)
    llr = 1.0 + rng.normal(0.0, 1.2, size=code.n_c)
    seen = False
    for k in range(1, 25):
        res = BpDecoder(code.h, max_iter=k).decode(llr)
        if seen:
            assert res.converged
        seen = seen or res.converged


def test_wrong_length(example_code):
    with pytest.raises(DimensionError):
        bp_decode(example_code.h, np.zeros(8))
    with pytest.raises(ValueError):
        BpDecoder(example_code.h, max_iter=0)
