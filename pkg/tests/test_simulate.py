import csv
import itertools
import math
from dataclasses import replace

import numpy as np
import pytest

from channel import ChannelConfig, add_awgn, demap_llr, frame_rng, map_ook
from codes import ZERO_OFFSET, position_classes, to_alist
from decoder import BpDecoder, DecodeResult
from gf2 import SparseBinMatrix
from matcher import dm_match
from shaping import build_shaping_graph, parity_block, shape_encode
from simulate import (
    CALIBRATION_POINT,
    CSV_COLUMNS,
    Calibration,
    ConfigError,
    SimConfig,
    SimRecord,
    calibrate,
    load_config,
    measure_empirical,
    parse_priors,
    parse_snr_list,
    prepare_link,
    resolve_priors,
    run_campaign,
    run_frame,
    snr_at_fer,
    write_records,
)

from conftest import EXAMPLE_ALIST


def _config(**kw):
    base = dict(
        code=EXAMPLE_ALIST,
        snr_db=(4.0,),
        target_p0=0.75,
        ell=2,
        dm=True,
        max_frames=60,
        max_frame_errors=60,
        max_iter=30,
        seed=3,
        calibration_frames=50,
    )
    base.update(kw)
    return SimConfig(**base)


def _record(snr, frames, errors):
    return SimRecord(snr, frames, errors, errors, frames * 4, 1.0, 0.75, 0.5, 0.6, 0.0)


def test_parse_snr_list():
    assert parse_snr_list("4:8:2") == (4.0, 6.0, 8.0)
    assert parse_snr_list("3:4:0.25") == (3.0, 3.25, 3.5, 3.75, 4.0)
    assert parse_snr_list("1, 2.5") == (1.0, 2.5)
    with pytest.raises(ConfigError):
        parse_snr_list("4:1:1")


def test_parse_priors():
    assert parse_priors("dm=0.7, parity=0.6") == {"dm": 0.7, "parity": 0.6}
    with pytest.raises(ConfigError):
        parse_priors("bogus=0.5")
    with pytest.raises(ConfigError):
        parse_priors("dm=1.5")


def test_config_validation():
    with pytest.raises(ConfigError):
        _config(snr_db=())
    with pytest.raises(ConfigError):
        _config(prior_mode="magic")
    with pytest.raises(ConfigError):
        _config(prior_mode="explicit")
    with pytest.raises(ConfigError):
        SimConfig.from_mapping({"code": "x.alist", "snr_db": "1", "colour": "red"})
    with pytest.raises(ConfigError):
        SimConfig.from_mapping({"code": "x.alist", "snr_db": "1", "max_frames": "many"})


def test_load_config_resolves_code_and_overrides(tmp_path):
    (tmp_path / "tiny.alist").write_text(EXAMPLE_ALIST.read_text())
    path = tmp_path / "run.conf"
    path.write_text("# smoke\ncode = tiny.alist\nsnr_db = 1:3:1\nell = auto\ndm = off\nworkers = 2\n")
    cfg = load_config(path, {"seed": "9", "workers": None})
    assert cfg.code == tmp_path / "tiny.alist"
    assert cfg.snr_db == (1.0, 2.0, 3.0)
    assert cfg.ell is None and cfg.dm is False
    assert (cfg.seed, cfg.workers) == (9, 2)


def test_prepare_link_derives_ell():
    link = prepare_link(_config(ell=None))
    assert link.spec.ell == 1
    assert link.codebook is not None and link.codebook.k_in == 2
    with pytest.raises(ConfigError):
        prepare_link(_config(ell=7))


def test_measure_empirical():
    classes = ["dm", "dm", "parity"]
    assert measure_empirical([[0, 0, 0], [0, 0, 0]], classes) == {"dm": 1.0, "parity": 1.0}
    assert measure_empirical([[0, 1, 1], [1, 0, 0]], classes) == {"dm": 0.5, "parity": 0.5}


def test_measure_empirical_matches_exhaustive_count(example_code, example_spec):
    graph = build_shaping_graph(example_code, example_spec)
    words = [shape_encode(graph, v, example_spec).codeword for v in itertools.product([0, 1], repeat=4)]
    parity = np.concatenate([parity_block(example_code, w) for w in words])
    got = measure_empirical(words, position_classes(example_code, example_spec))
    assert got["parity"] == pytest.approx(float(np.mean(parity == 0)))
    assert got["dm"] == pytest.approx(0.5)


def test_resolve_priors():
    calib = Calibration(empirical={"dm": 0.75, "shaping": 0.6, "parity": 0.7}, p0_transmitted=0.7)
    assert resolve_priors(_config(), calib) == {"dm": 0.75, "shaping": 0.6, "parity": 0.7, "punctured": 0.5}
    measured = Calibration(empirical={"dm": 0.75, "punctured": 0.9, "parity": 0.7}, p0_transmitted=0.7)
    assert resolve_priors(_config(), measured)["punctured"] == 0.5
    assert set(resolve_priors(_config(prior_mode="uniform"), calib).values()) == {0.5}
    explicit = _config(prior_mode="explicit", priors={"parity": 0.8})
    assert resolve_priors(explicit, calib) == {"parity": 0.8}


def test_noiseless_link_has_no_errors():
    (rec,) = run_campaign(_config(snr_db=(40.0,), max_frames=100, max_frame_errors=100))
    assert rec.frames == 100
    assert rec.frame_errors == 0 and rec.bit_errors == 0
    assert rec.p0_dm == pytest.approx(0.75)


def test_exhaustive_messages_survive_high_snr(example_code, example_spec):
    graph = build_shaping_graph(example_code, example_spec)
    classes = position_classes(example_code, example_spec)
    decoder = BpDecoder(example_code.h)
    ch = ChannelConfig.from_snr(40.0, 0.6)
    rng = np.random.default_rng(0)
    for v in itertools.product([0, 1], repeat=4):
        c = shape_encode(graph, v, example_spec).codeword
        y = add_awgn(map_ook(c, amplitude=ch.amplitude), ch.sigma, rng)
        res = decoder.decode(demap_llr(y, ch, classes))
        assert res.converged
        assert np.array_equal(res.hard_bits, c)


def test_punctured_campaign_end_to_end():
    cfg = _config(puncture=(0, 1), snr_db=(40.0,), max_frames=100, max_frame_errors=100)
    link = prepare_link(cfg)
    assert link.spec.positions == (0, 1)
    assert link.spec.offset_mode == (ZERO_OFFSET, ZERO_OFFSET)
    assert list(link.classes) == ["punctured"] * 2 + ["dm"] * 4 + ["parity"] * 3

    calib = calibrate(link, cfg.calibration_frames)
    words = []
    for f in range(cfg.calibration_frames):
        rng = frame_rng(cfg.seed, CALIBRATION_POINT, f)
        info = rng.integers(0, 2, size=link.info_length, dtype=np.uint8)
        words.append(shape_encode(link.graph, dm_match(link.codebook, info), link.spec).codeword)
    words = np.array(words)
    assert calib.p0_transmitted == pytest.approx(float(np.mean(words[:, 2:] == 0)))
    assert resolve_priors(cfg, calib)["punctured"] == 0.5

    (rec,) = run_campaign(cfg)
    assert rec.frames == 100
    assert rec.frame_errors == 0 and rec.bit_errors == 0
    assert not math.isnan(rec.p0_shaping)
    assert rec.p0_dm == pytest.approx(0.75)


def test_frames_are_reproducible():
    cfg = _config(snr_db=(2.0,))
    link = replace(prepare_link(cfg), channels=(ChannelConfig.from_snr(2.0, 0.6),))
    for frame in (0, 5, 17):
        assert run_frame(link, 0, frame) == run_frame(link, 0, frame)


def test_dematch_failure_counts_as_frame_error():
    class AllOnes:
        def decode(self, llr):
            n = len(llr)
            return DecodeResult(np.ones(n, dtype=np.uint8), 3, False, -np.ones(n))

    cfg = _config(snr_db=(2.0,))
    link = replace(prepare_link(cfg), channels=(ChannelConfig.from_snr(2.0, 0.6),), decoder=AllOnes())
    out = run_frame(link, 0, 0)
    assert out.frame_error
    assert out.bit_errors == link.info_length // 2
    assert out.iterations == 3


def test_results_do_not_depend_on_worker_count():
    cfg = _config(snr_db=(0.0, 3.0), max_frames=150, max_frame_errors=10)
    strip = lambda recs: [replace(r, seconds=0.0) for r in recs]
    serial = strip(run_campaign(cfg))
    assert serial == strip(run_campaign(cfg))
    assert serial == strip(run_campaign(replace(cfg, workers=2)))
    assert serial[0].frame_errors <= cfg.max_frame_errors


def test_uniform_campaign_without_shaping():
    (rec,) = run_campaign(_config(ell=0, dm=False, target_p0=0.5, prior_mode="uniform", snr_db=(30.0,)))
    assert rec.frame_errors == 0
    assert math.isnan(rec.p0_shaping)


def test_write_records(tmp_path):
    records = [_record(1.0, 100, 10), _record(2.0, 100, 1), replace(_record(3.0, 100, 0), p0_shaping=float("nan"))]
    path = tmp_path / "out" / "sim.csv"
    write_records(path, records)
    with path.open() as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0].keys()) == CSV_COLUMNS
    assert len(rows) == 3
    assert rows[0]["fer"] == "0.1"
    assert rows[2]["p0_shaping"] == ""


def test_snr_at_fer():
    records = [_record(1.0, 100, 10), _record(3.0, 1000, 1)]
    assert snr_at_fer(records, 1e-2) == pytest.approx(2.0)
    assert math.isnan(snr_at_fer(records, 1e-5))


def test_snr_at_fer_does_not_extrapolate_below_first_point():
    records = [_record(1.0, 1000, 1), _record(3.0, 1000, 0)]
    assert math.isnan(snr_at_fer(records, 1e-2))


def _single_message_code(tmp_path, shaping_cols):
    # 28 checks: message bit j, the listed shaping columns, parity bit 35 + j
    rows = [[j, *shaping_cols(j), 35 + j] for j in range(28)]
    path = tmp_path / "tailored.alist"
    path.write_text(to_alist(SparseBinMatrix.from_row_adj(28, 63, rows)))
    return path


def test_parity_reaches_target_when_each_check_sees_one_shaping_bit(tmp_path):
    code = _single_message_code(tmp_path, lambda j: [28 + j % 7])
    link = prepare_link(_config(code=code, ell=None, target_p0=0.75))
    assert link.spec.positions == tuple(range(28, 35))
    assert all(s.size == 1 for s in link.graph.cn_shaping)

    frames = 3600
    calib = calibrate(link, frames)
    assert frames * link.code.n_parity >= 100_000
    assert calib.guess_fraction == 0.0
    assert abs(calib.empirical["parity"] - 0.75) <= 0.05
    assert calib.empirical["dm"] == pytest.approx(0.75)


def test_dense_generator_rows_force_guesses(tmp_path):
    code = _single_message_code(tmp_path, lambda j: list(range(28, 35)))
    link = prepare_link(_config(code=code, ell=None, target_p0=0.75))
    calib = calibrate(link, 20)
    # only the last of the seven decisions sees a check with one open shaping bit
    assert calib.guess_fraction == pytest.approx(6 / 7)
