"""Monte Carlo FER/BER campaigns over the full shaped OOK link.

A campaign is configured by a flat ``key = value`` file (see ``CONFIG_KEYS``).
Every frame draws from its own RNG stream keyed by (seed, SNR point, frame
index), and outcomes are aggregated in frame order, so results depend on
neither the worker count nor scheduling.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from channel import ChannelConfig, add_awgn, demap_llr, frame_rng, map_ook
from codes import (
    CLASS_DM,
    CLASS_PARITY,
    CLASS_PUNCTURED,
    CLASS_SHAPING,
    LdpcCode,
    ShapingSpec,
    load_code,
    parse_index_list,
    position_classes,
)
from decoder import DEFAULT_MAX_ITER, BpDecoder
from matcher import CompositionError, DmCodebook, OutOfCodebookError, codebook_for, dm_dematch, dm_match
from shaping import GeneratorGraph, ShapeResult, build_shaping_graph, required_shaping_bits, shape_encode

RED = "\033[31m"
GREEN = "\033[32m"
YELLOW = "\033[33m"
RESET = "\033[0m"

REPORTED_CLASSES = (CLASS_DM, CLASS_SHAPING, CLASS_PARITY)
CSV_COLUMNS = [
    "snr_db",
    "frames",
    "frame_errors",
    "fer",
    "ber",
    "mean_iters",
    "p0_dm",
    "p0_shaping",
    "p0_parity",
    "seconds",
]
PRIOR_MODES = ("empirical", "uniform", "explicit")
DEFAULT_CALIBRATION_FRAMES = 200
FRAMES_PER_WORKER_BATCH = 32
# RNG stream reserved for the calibration pass
CALIBRATION_POINT = 2 ** 32 - 1

CONFIG_KEYS = (
    "code",
    "format",
    "puncture",
    "ell",
    "ell_rounding",
    "positions",
    "target_p0",
    "offset",
    "dm",
    "dm_k_in",
    "snr_db",
    "max_frames",
    "max_frame_errors",
    "max_iter",
    "seed",
    "prior_mode",
    "priors",
    "calibration_frames",
    "workers",
    "amplitude",
)


class ConfigError(ValueError):
    pass


def parse_snr_list(text: str) -> Tuple[float, ...]:
    """``"1,2,3.5"`` or ``"start:stop:step"`` (stop included)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"SNR range must read start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ConfigError(f"empty SNR range {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(count))
    return tuple(float(p) for p in text.split(",") if p.strip())


def parse_priors(text: str) -> Dict[str, float]:
    out: Dict[str, float] = {}
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        if "=" not in part:
            raise ConfigError(f"prior entries read class=value, got {part!r}")
        name, val = (s.strip() for s in part.split("=", 1))
        if name not in (CLASS_DM, CLASS_SHAPING, CLASS_PARITY, CLASS_PUNCTURED):
            raise ConfigError(f"unknown position class {name!r} in priors")
        q = float(val)
        if not 0.0 <= q <= 1.0:
            raise ConfigError(f"prior for {name} must lie in [0, 1], got {q}")
        out[name] = q
    return out


def _parse_bool(text: str) -> bool:
    val = text.strip().lower()
    if val in ("on", "true", "yes", "1"):
        return True
    if val in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"expected on/off, got {text!r}")


@dataclass(frozen=True)
class SimConfig:
    code: Path
    snr_db: Tuple[float, ...]
    code_format: str = "auto"
    puncture: Tuple[int, ...] = ()
    ell: Optional[int] = None  # None: derive from the parity count and target_p0
    ell_rounding: str = "nearest"
    positions: Optional[Tuple[int, ...]] = None
    target_p0: float = 0.5
    offset: str = "auto"
    dm: bool = True
    dm_k_in: Optional[int] = None
    max_frames: int = 1000
    max_frame_errors: int = 100
    max_iter: int = DEFAULT_MAX_ITER
    seed: int = 0
    prior_mode: str = "empirical"
    priors: Mapping[str, float] = field(default_factory=dict)
    calibration_frames: int = DEFAULT_CALIBRATION_FRAMES
    workers: int = 1
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if not self.snr_db:
            raise ConfigError("snr_db list is empty")
        if not 0.0 < self.target_p0 < 1.0:
            raise ConfigError(f"target_p0 must lie in (0, 1), got {self.target_p0}")
        if self.code_format not in ("auto", "alist", "base"):
            raise ConfigError(f"unknown code format {self.code_format!r}")
        if self.ell is not None and self.ell < 0:
            raise ConfigError(f"ell must be non-negative, got {self.ell}")
        if self.ell_rounding not in ("nearest", "floor", "ceil"):
            raise ConfigError(f"unknown ell rounding {self.ell_rounding!r}")
        if self.offset not in ("auto", "with", "zero"):
            raise ConfigError(f"offset must be auto, with or zero, got {self.offset!r}")
        if self.max_frames < 1 or self.max_frame_errors < 1 or self.max_iter < 1:
            raise ConfigError("max_frames, max_frame_errors and max_iter must be positive")
        if self.prior_mode not in PRIOR_MODES:
            raise ConfigError(f"prior_mode must be one of {PRIOR_MODES}, got {self.prior_mode!r}")
        if self.prior_mode == "explicit" and not self.priors:
            raise ConfigError("prior_mode=explicit needs a priors entry")
        if self.calibration_frames < 1:
            raise ConfigError("calibration_frames must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.amplitude <= 0.0:
            raise ConfigError("amplitude must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    @classmethod
    def from_mapping(cls, values: Mapping[str, str], base_dir: Optional[Path] = None) -> "SimConfig":
        unknown = sorted(set(values) - set(CONFIG_KEYS))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        if not values.get("code"):
            raise ConfigError("configuration needs a code entry")
        if not values.get("snr_db"):
            raise ConfigError("configuration needs an snr_db entry")
        code = Path(values["code"])
        if base_dir is not None and not code.is_absolute() and not code.exists() and (base_dir / code).exists():
            code = base_dir / code
        kw: Dict[str, object] = {"code": code}
        try:
            kw["snr_db"] = parse_snr_list(values["snr_db"])
            if "format" in values:
                kw["code_format"] = values["format"].strip()
            if values.get("puncture", "").strip():
                kw["puncture"] = parse_index_list(values["puncture"])
            if "ell" in values and values["ell"].strip() != "auto":
                kw["ell"] = int(values["ell"])
            if values.get("positions", "").strip():
                kw["positions"] = parse_index_list(values["positions"])
            if "dm" in values:
                kw["dm"] = _parse_bool(values["dm"])
            if values.get("dm_k_in", "").strip():
                kw["dm_k_in"] = int(values["dm_k_in"])
            if values.get("priors", "").strip():
                kw["priors"] = parse_priors(values["priors"])
            for key in ("ell_rounding", "offset", "prior_mode"):
                if key in values:
                    kw[key] = values[key].strip()
            for key in ("max_frames", "max_frame_errors", "max_iter", "seed", "calibration_frames", "workers"):
                if key in values:
                    kw[key] = int(values[key])
            for key in ("target_p0", "amplitude"):
                if key in values:
                    kw[key] = float(values[key])
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(str(e)) from None
        return cls(**kw)  # type: ignore[arg-type]


def read_config_file(path: Path) -> Dict[str, str]:
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key] = val
    return values


def load_config(path: Optional[Path], overrides: Optional[Mapping[str, str]] = None) -> SimConfig:
    values = read_config_file(path) if path is not None else {}
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return SimConfig.from_mapping(values, base_dir=Path(path).parent if path is not None else None)


@dataclass(frozen=True)
class SimRecord:
    snr_db: float
    frames: int
    frame_errors: int
    bit_errors: int
    info_bits: int
    mean_iters: float
    p0_dm: float
    p0_shaping: float
    p0_parity: float
    seconds: float

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else float("nan")

    @property
    def ber(self) -> float:
        return self.bit_errors / self.info_bits if self.info_bits else float("nan")


@dataclass(frozen=True, eq=False)
class Link:
    """Everything a worker needs to run frames; picklable and read-only."""

    cfg: SimConfig
    code: LdpcCode
    spec: ShapingSpec
    graph: GeneratorGraph
    codebook: Optional[DmCodebook]
    decoder: BpDecoder
    classes: np.ndarray
    channels: Tuple[ChannelConfig, ...] = ()

    @property
    def info_length(self) -> int:
        return self.codebook.k_in if self.codebook is not None else self.code.k_c - self.spec.ell


@dataclass(frozen=True)
class FrameOutcome:
    frame_error: bool
    bit_errors: int
    iterations: int
    zeros: Tuple[int, ...]  # per REPORTED_CLASSES
    totals: Tuple[int, ...]


def prepare_link(cfg: SimConfig) -> Link:
    code = load_code(cfg.code, cfg.puncture, cfg.code_format)
    ell = cfg.ell
    if ell is None:
        ell = required_shaping_bits(code.n_parity, cfg.target_p0, cfg.ell_rounding)
    if ell > code.k_c:
        raise ConfigError(f"ell={ell} exceeds the code dimension {code.k_c}")
    try:
        spec = ShapingSpec.build(code, ell, cfg.target_p0, cfg.positions, cfg.offset)
        graph = build_shaping_graph(code, spec)
        codebook = codebook_for(code.k_c - ell, cfg.target_p0, cfg.dm_k_in) if cfg.dm else None
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return Link(
        cfg=cfg,
        code=code,
        spec=spec,
        graph=graph,
        codebook=codebook,
        decoder=BpDecoder(code.h, max_iter=cfg.max_iter),
        classes=position_classes(code, spec),
    )


def _draw_codeword(link: Link, rng: np.random.Generator) -> Tuple[np.ndarray, ShapeResult]:
    info = rng.integers(0, 2, size=link.info_length, dtype=np.uint8)
    v = dm_match(link.codebook, info) if link.codebook is not None else info
    return info, shape_encode(link.graph, v, link.spec)


def _class_counts(classes: np.ndarray, codeword: np.ndarray) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    zeros, totals = [], []
    for name in REPORTED_CLASSES:
        # p0_shaping covers every shaping bit, punctured or not
        sel = np.isin(classes, (CLASS_SHAPING, CLASS_PUNCTURED)) if name == CLASS_SHAPING else classes == name
        totals.append(int(sel.sum()))
        zeros.append(int(np.count_nonzero(codeword[sel] == 0)))
    return tuple(zeros), tuple(totals)


def run_frame(link: Link, point: int, frame: int) -> FrameOutcome:
    """One end-to-end frame; reproducible from (seed, point, frame) alone."""
    rng = frame_rng(link.cfg.seed, point, frame)
    info, shaped = _draw_codeword(link, rng)
    codeword = shaped.codeword
    ch = link.channels[point]
    y = add_awgn(map_ook(codeword, link.code.puncture_set, ch.amplitude), ch.sigma, rng)
    res = link.decoder.decode(demap_llr(y, ch, link.classes, link.code.puncture_set))

    v_hat = link.code.to_systematic_order(res.hard_bits)[link.graph.message_positions]
    if link.codebook is None:
        bit_errors = int(np.count_nonzero(v_hat != info))
        failed = bit_errors > 0
    else:
        try:
            info_hat = dm_dematch(link.codebook, v_hat)
            bit_errors = int(np.count_nonzero(info_hat != info))
            failed = bit_errors > 0
        except (CompositionError, OutOfCodebookError):
            bit_errors = link.info_length // 2
            failed = True
    zeros, totals = _class_counts(link.classes, codeword)
    return FrameOutcome(failed, bit_errors, res.iterations_used, zeros, totals)


def measure_empirical(codewords: Iterable[Sequence[int]], classes: Sequence[str]) -> Dict[str, float]:
    """Zero-fraction of every position class over a sample of codewords."""
    words = np.atleast_2d(np.asarray(list(codewords), dtype=np.uint8))
    if words.size == 0:
        raise ValueError("empty codeword sample")
    labels = np.asarray(classes, dtype=object)
    if labels.size != words.shape[1]:
        raise ValueError(f"{labels.size} class labels for codewords of length {words.shape[1]}")
    out: Dict[str, float] = {}
    for name in dict.fromkeys(labels.tolist()):
        block = words[:, labels == name]
        out[name] = float(np.count_nonzero(block == 0)) / block.size
    return out


@dataclass(frozen=True)
class Calibration:
    empirical: Dict[str, float]
    p0_transmitted: float
    guess_fraction: float = float("nan")  # decisions taken with every check message at zero


def calibrate(link: Link, frames: int) -> Calibration:
    shaped = [_draw_codeword(link, frame_rng(link.cfg.seed, CALIBRATION_POINT, f))[1] for f in range(frames)]
    words = np.array([s.codeword for s in shaped], dtype=np.uint8)
    empirical = measure_empirical(words, link.classes)
    tx = np.ones(link.code.n_c, dtype=bool)
    if link.code.puncture_set:
        tx[list(link.code.puncture_set)] = False
    p0_tx = float(np.count_nonzero(words[:, tx] == 0)) / words[:, tx].size if tx.any() else 0.5
    steps = [step for s in shaped for step in s.decision_trace]
    guesses = _fraction(sum(step.guess for step in steps), len(steps))
    return Calibration(empirical=empirical, p0_transmitted=p0_tx, guess_fraction=guesses)


def resolve_priors(cfg: SimConfig, calib: Calibration) -> Dict[str, float]:
    if cfg.prior_mode == "uniform":
        return {name: 0.5 for name in (CLASS_DM, CLASS_SHAPING, CLASS_PARITY, CLASS_PUNCTURED)}
    if cfg.prior_mode == "explicit":
        return dict(cfg.priors)
    priors = {name: q for name, q in calib.empirical.items()}
    priors[CLASS_PUNCTURED] = float(cfg.priors.get(CLASS_PUNCTURED, 0.5))
    return priors


_WORKER_LINK: Optional[Link] = None


def _init_worker(link: Link) -> None:
    global _WORKER_LINK
    _WORKER_LINK = link


def _run_indexed(task: Tuple[int, int]) -> FrameOutcome:
    assert _WORKER_LINK is not None
    return run_frame(_WORKER_LINK, *task)


def _outcomes(
    link: Link, point: int, frames: range, pool: Optional[ProcessPoolExecutor]
) -> Iterator[FrameOutcome]:
    if pool is None:
        return (run_frame(link, point, f) for f in frames)
    return pool.map(_run_indexed, [(point, f) for f in frames], chunksize=max(1, len(frames) // (4 * link.cfg.workers)))


def _fraction(zeros: int, total: int) -> float:
    return zeros / total if total else float("nan")


def _run_point(link: Link, point: int, pool: Optional[ProcessPoolExecutor], verbose: bool) -> SimRecord:
    cfg = link.cfg
    started = time.perf_counter()
    frames = errors = bit_errors = iters = 0
    zeros = np.zeros(len(REPORTED_CLASSES), dtype=np.int64)
    totals = np.zeros(len(REPORTED_CLASSES), dtype=np.int64)
    batch = FRAMES_PER_WORKER_BATCH * cfg.workers
    bar = tqdm(total=cfg.max_frames, desc=f"[sim] {cfg.snr_db[point]:.2f} dB", leave=False, disable=not verbose)
    try:
        while frames < cfg.max_frames and errors < cfg.max_frame_errors:
            chunk = range(frames, min(frames + batch, cfg.max_frames))
            for out in _outcomes(link, point, chunk, pool):
                frames += 1
                errors += int(out.frame_error)
                bit_errors += out.bit_errors
                iters += out.iterations
                zeros += out.zeros
                totals += out.totals
                bar.update(1)
                if errors >= cfg.max_frame_errors:
                    break
    finally:
        bar.close()
    return SimRecord(
        snr_db=cfg.snr_db[point],
        frames=frames,
        frame_errors=errors,
        bit_errors=bit_errors,
        info_bits=frames * link.info_length,
        mean_iters=iters / frames,
        p0_dm=_fraction(int(zeros[0]), int(totals[0])),
        p0_shaping=_fraction(int(zeros[1]), int(totals[1])),
        p0_parity=_fraction(int(zeros[2]), int(totals[2])),
        seconds=time.perf_counter() - started,
    )


def _describe(link: Link) -> str:
    code, spec = link.code, link.spec
    dm = f"k_in={link.codebook.k_in} n_ones={link.codebook.comp.n_ones}" if link.codebook else "off"
    return (
        f"[sim] code n_c={code.n_c} k_c={code.k_c} punctured={len(code.puncture_set)} "
        f"ell={spec.ell} target_p0={spec.target_p0} dm={dm} prior_mode={link.cfg.prior_mode}"
    )


def run_campaign(cfg: SimConfig, verbose: bool = False) -> List[SimRecord]:
    link = prepare_link(cfg)
    calib = calibrate(link, cfg.calibration_frames)
    if calib.p0_transmitted >= 1.0:
        raise ConfigError("calibration produced no transmitted ones; SNR cannot be set")
    priors = resolve_priors(cfg, calib)
    channels = tuple(ChannelConfig.from_snr(s, calib.p0_transmitted, cfg.amplitude, priors) for s in cfg.snr_db)
    link = replace(link, channels=channels)
    if verbose:
        print(_describe(link))
        shown = ", ".join(f"{k}={v:.4f}" for k, v in sorted(calib.empirical.items()))
        print(
            f"[sim] calibration over {cfg.calibration_frames} frames: {shown} "
            f"p0_tx={calib.p0_transmitted:.4f} guessed={calib.guess_fraction:.3f}"
        )

    records: List[SimRecord] = []
    pool = None
    if cfg.workers > 1:
        pool = ProcessPoolExecutor(max_workers=cfg.workers, initializer=_init_worker, initargs=(link,))
    try:
        for point in range(len(cfg.snr_db)):
            rec = _run_point(link, point, pool, verbose)
            records.append(rec)
            if verbose:
                color = GREEN if rec.frame_errors == 0 else YELLOW
                if rec.frame_errors >= cfg.max_frame_errors:
                    color = RED
                print(
                    f"{color}[sim] snr={rec.snr_db:.2f} dB frames={rec.frames} errors={rec.frame_errors} "
                    f"fer={rec.fer:.3e} ber={rec.ber:.3e} iters={rec.mean_iters:.1f} "
                    f"p0_parity={rec.p0_parity:.4f}{RESET}"
                )
    finally:
        if pool is not None:
            pool.shutdown()
    return records


def _fmt(value: float) -> str:
    if isinstance(value, float) and math.isnan(value):
        return ""
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def record_row(rec: SimRecord) -> Dict[str, str]:
    values = {
        "snr_db": rec.snr_db,
        "frames": rec.frames,
        "frame_errors": rec.frame_errors,
        "fer": rec.fer,
        "ber": rec.ber,
        "mean_iters": rec.mean_iters,
        "p0_dm": rec.p0_dm,
        "p0_shaping": rec.p0_shaping,
        "p0_parity": rec.p0_parity,
        "seconds": rec.seconds,
    }
    return {k: _fmt(v) for k, v in values.items()}


def write_records(path: Path, records: Sequence[SimRecord]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for rec in records:
            w.writerow(record_row(rec))


def snr_at_fer(records: Sequence[SimRecord], target: float) -> float:
    """SNR where the FER curve crosses ``target``, interpolating log10(FER) linearly.

    Returns NaN unless two measured points bracket the target; a curve that
    starts below the target is not extrapolated.
    """
    pts = sorted((r.snr_db, r.fer) for r in records if r.frames)
    for (s0, f0), (s1, f1) in zip(pts, pts[1:]):
        if f0 >= target >= f1:
            if f1 <= 0.0:
                return s1
            if f0 == f1:
                return s0
            l0, l1, lt = math.log10(f0), math.log10(f1), math.log10(target)
            return s0 + (s1 - s0) * (l0 - lt) / (l0 - l1)
    return float("nan")
