import math

import numpy as np
import pytest

from matcher import (
    Composition,
    CompositionError,
    DmCodebook,
    OutOfCodebookError,
    bits_to_int,
    choose_composition,
    codebook_for,
    dm_dematch,
    dm_dematch_many,
    dm_match,
    dm_match_many,
    int_to_bits,
    rank,
    rank_many,
    unrank,
    unrank_many,
)


def test_choose_composition():
    assert choose_composition(992, 0.83).n_ones == 169
    assert choose_composition(4, 0.5).n_ones == 2
    assert choose_composition(4, 0.75).n_ones == 1
    with pytest.raises(CompositionError):
        choose_composition(4, 1.0)


def test_match_examples():
    cb = DmCodebook(Composition(4, 2))
    assert cb.k_in == 2
    assert list(dm_match(cb, [0, 0])) == [0, 0, 1, 1]
    assert list(dm_match(cb, [1, 1])) == [1, 0, 0, 1]
    assert list(dm_dematch(cb, [0, 0, 1, 1])) == [0, 0]


def test_dematch_outside_codebook():
    cb = DmCodebook(Composition(4, 2))
    with pytest.raises(OutOfCodebookError):
        dm_dematch(cb, [1, 1, 0, 0])
    with pytest.raises(CompositionError):
        dm_dematch(cb, [1, 1, 1, 0])


def test_degenerate_compositions():
    cb = DmCodebook(Composition(5, 0))
    assert cb.k_in == 0
    assert list(dm_match(cb, [])) == [0] * 5
    empty = DmCodebook(Composition(0, 0))
    assert empty.rate == 0.0 and empty.comp.p0 == 1.0


def test_pinned_k_in():
    assert codebook_for(8, 0.75, k_in=3).k_in == 3
    with pytest.raises(CompositionError):
        DmCodebook(Composition(4, 2), k_in=3)
    with pytest.raises(CompositionError):
        dm_match(DmCodebook(Composition(4, 2)), [1, 0, 1])


def test_exhaustive_round_trip_small_lengths():
    for n in range(1, 15):
        for w in range(n + 1):
            cb = DmCodebook(Composition(n, w))
            for i in range(1 << cb.k_in):
                seq = dm_match(cb, int_to_bits(i, cb.k_in))
                assert seq.size == n and int(seq.sum()) == w
                assert bits_to_int(dm_dematch(cb, seq)) == i


def test_exhaustive_round_trip_up_to_24_outputs():
    for n in range(1, 25):
        for w in range(n + 1):
            cb = DmCodebook(Composition(n, w))
            idx = np.arange(1 << cb.k_in, dtype=np.int64)
            seqs = unrank_many(cb.comp, idx)
            assert seqs.shape == (idx.size, n)
            assert np.all(seqs.sum(axis=1) == w)
            assert np.array_equal(rank_many(cb.comp, seqs), idx)


def test_batch_matches_scalar_path():
    rng = np.random.default_rng(0)
    for n, w in ((12, 3), (20, 10), (24, 6)):
        cb = DmCodebook(Composition(n, w))
        msgs = rng.integers(0, 2, size=(50, cb.k_in))
        seqs = dm_match_many(cb, msgs)
        for msg, seq in zip(msgs, seqs):
            assert np.array_equal(seq, dm_match(cb, msg))
        assert np.array_equal(dm_dematch_many(cb, seqs), msgs)
    for n in range(1, 15):
        for w in range(n + 1):
            cb = DmCodebook(Composition(n, w))
            msgs = np.array([int_to_bits(i, cb.k_in) for i in range(1 << cb.k_in)], dtype=np.uint8)
            assert np.array_equal(dm_dematch_many(cb, dm_match_many(cb, msgs)), msgs)


def test_batch_dematch_rejects_foreign_rows():
    cb = DmCodebook(Composition(4, 2))
    with pytest.raises(OutOfCodebookError):
        dm_dematch_many(cb, [[0, 0, 1, 1], [1, 1, 0, 0]])
    with pytest.raises(CompositionError):
        dm_dematch_many(cb, [[1, 1, 1, 0]])
    with pytest.raises(CompositionError):
        dm_match_many(cb, [[1, 0, 1]])


def test_batch_falls_back_above_int64_lengths():
    cb = codebook_for(128, 0.75)
    rng = np.random.default_rng(5)
    msgs = rng.integers(0, 2, size=(3, cb.k_in))
    seqs = dm_match_many(cb, msgs)
    assert seqs.shape == (3, 128) and np.all(seqs.sum(axis=1) == cb.comp.n_ones)
    assert np.array_equal(dm_dematch_many(cb, seqs), msgs)


def test_unrank_is_lexicographic():
    comp = Composition(8, 3)
    words = ["".join(map(str, unrank(comp, i))) for i in range(math.comb(8, 3))]
    assert words == sorted(words)
    assert len(set(words)) == len(words)
    assert all(rank(comp, [int(c) for c in w]) == i for i, w in enumerate(words))


def test_large_composition_round_trip():
    cb = codebook_for(992, 0.83)
    rng = np.random.default_rng(3)
    msg = rng.integers(0, 2, size=cb.k_in)
    seq = dm_match(cb, msg)
    assert int(seq.sum()) == 169
    assert np.array_equal(dm_dematch(cb, seq), msg)


def test_rate_loss_is_non_negative():
    for n in range(1, 25):
        for w in range(n + 1):
            assert DmCodebook(Composition(n, w)).rate_loss >= -1e-12
