import argparse
import csv
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from codes import (
    AlistFormatError,
    BaseMatrixFormatError,
    LdpcCode,
    PunctureError,
    ShapingSpec,
    load_code,
    parse_index_list,
)
from decoder import DEFAULT_MAX_ITER, BpDecoder
from gf2 import DimensionError, StructuralError, rank, weight_profile
from matcher import (
    Composition,
    CompositionError,
    DmCodebook,
    OutOfCodebookError,
    codebook_for,
    dm_dematch_many,
    dm_match_many,
)
from rates import baseline_snr
from shaping import (
    LLPS_MAX_ELL,
    ShapingPositionError,
    build_shaping_graph,
    llps_exact,
    parity_block,
    reencode_check,
    required_shaping_bits,
    shape_encode,
)
from simulate import GREEN, RED, RESET, YELLOW, ConfigError, load_config, run_campaign, write_records

EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_FORMAT = 3
EXIT_STRUCTURE = 4
EXIT_DM = 5
EXIT_IO = 6


class InputFormatError(ValueError):
    pass


def find_repo_root(start: Path) -> Path:
    cur = start
    for _ in range(10):
        if (cur / ".git").exists() or (cur / "pyproject.toml").exists():
            return cur
        if cur.parent == cur:
            break
        cur = cur.parent
    return start


def read_bit_lines(path: Path) -> List[np.ndarray]:
    out = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if set(line) - {"0", "1"}:
            raise InputFormatError(f"{path}:{lineno}: bit lines hold only 0 and 1")
        out.append(np.frombuffer(line.encode(), dtype=np.uint8) - ord("0"))
    return out


def write_bit_lines(path: Path, vectors: Sequence[np.ndarray]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join("".join(str(int(b)) for b in v) + "\n" for v in vectors))


def read_llr_frames(path: Path, n: int) -> List[np.ndarray]:
    vals = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            vals.append(float(line))
        except ValueError:
            raise InputFormatError(f"{path}:{lineno}: not a decimal number: {line!r}") from None
    if not vals or len(vals) % n:
        raise InputFormatError(f"{path}: {len(vals)} LLR values do not split into frames of {n}")
    arr = np.array(vals)
    return [arr[i : i + n] for i in range(0, arr.size, n)]


def _add_code_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--code", required=True, type=Path, help="alist or base-matrix file")
    p.add_argument("--format", default="auto", choices=["auto", "alist", "base"], help="Code file format")
    p.add_argument("--puncture", default="", help="Punctured codeword positions, e.g. 0,1,5-7")


def _add_shaping_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p0", type=float, default=0.5, help="Target probability of symbol 0")
    p.add_argument("--ell", default="auto", help="Shaping-bit count, or 'auto' for the entropy budget")
    p.add_argument("--ell-rounding", default="nearest", choices=["nearest", "floor", "ceil"])
    p.add_argument("--positions", default="", help="Systematic shaping positions (default placement otherwise)")
    p.add_argument("--offset", default="auto", choices=["auto", "with", "zero"], help="Decimation offset mode")


def _load_code(args) -> LdpcCode:
    return load_code(args.code, parse_index_list(args.puncture), args.format)


def _load_shaping(args) -> Tuple[LdpcCode, ShapingSpec]:
    code = _load_code(args)
    if args.ell == "auto":
        ell = required_shaping_bits(code.n_parity, args.p0, args.ell_rounding)
    else:
        try:
            ell = int(args.ell)
        except ValueError:
            raise ConfigError(f"--ell must be an integer or 'auto', got {args.ell!r}") from None
    positions = parse_index_list(args.positions) if args.positions else None
    return code, ShapingSpec.build(code, ell, args.p0, positions, args.offset)


def _codebook(args) -> DmCodebook:
    if args.ones is not None:
        return DmCodebook(comp=Composition(args.n_out, args.ones), k_in=args.k_in)
    return codebook_for(args.n_out, args.p0, args.k_in)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        description="Shaped LDPC coding for on-off keying: encode, decode, rates and Monte Carlo campaigns.",
    )

    sub = p.add_subparsers(dest="cmd", required=True)

    # codeinfo command
    cp = sub.add_parser("codeinfo", help="Print code dimensions and degree profiles")
    cp.add_argument("code", type=Path, help="alist or base-matrix file")
    cp.add_argument("--format", default="auto", choices=["auto", "alist", "base"])
    cp.add_argument("--puncture", default="", help="Punctured codeword positions")

    # dm command
    dp = sub.add_parser("dm", help="Constant-composition distribution matcher")
    dp.add_argument("direction", choices=["match", "dematch"])
    dp.add_argument("--n-out", required=True, type=int, help="Output sequence length")
    dp.add_argument("--p0", type=float, default=0.5, help="Target probability of 0 (sets the composition)")
    dp.add_argument("--ones", type=int, default=None, help="Explicit number of ones (overrides --p0)")
    dp.add_argument("--k-in", type=int, default=None, help="Pin the input length below its maximum")
    dp.add_argument("--in", dest="in_path", required=True, type=Path)
    dp.add_argument("--out", dest="out_path", required=True, type=Path)
    dp.add_argument("--verbose", action="store_true")

    # encode command
    ep = sub.add_parser("encode", help="Shape-encode message lines into codeword lines")
    _add_code_args(ep)
    _add_shaping_args(ep)
    ep.add_argument("--in", dest="in_path", required=True, type=Path, help="Message bits, one vector per line")
    ep.add_argument("--out", dest="out_path", required=True, type=Path, help="Codeword bits, original column order")
    ep.add_argument("--trace", type=Path, default=None, help="Write the decision trace as CSV")
    ep.add_argument("--verbose", action="store_true")

    # decode command
    xp = sub.add_parser("decode", help="Belief-propagation decode LLR frames into message lines")
    _add_code_args(xp)
    _add_shaping_args(xp)
    xp.add_argument("--in", dest="in_path", required=True, type=Path, help="LLRs, one decimal per line")
    xp.add_argument("--out", dest="out_path", required=True, type=Path, help="Decoded message bits")
    xp.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    xp.add_argument("--check", action="store_true", help="Re-encode and compare the decoded shaping bits")
    xp.add_argument("--verbose", action="store_true")

    # capacity command
    ap = sub.add_parser("capacity", help="SNR in dB at which a reference input distribution reaches a rate")
    ap.add_argument("--rate", required=True, type=float)
    ap.add_argument("--dist", default="uniform", help="uniform | optimal | ts | classes=f:q0,f:q0,...")
    ap.add_argument("--code-rate", type=float, default=0.75, help="Systematic fraction for --dist ts")

    # simulate command
    sp = sub.add_parser("simulate", help="Run a Monte Carlo campaign and write a CSV")
    sp.add_argument("--config", type=Path, default=None, help="key = value campaign file")
    sp.add_argument("--code", default=None)
    sp.add_argument("--snr-db", default=None, help="Comma list or start:stop:step")
    sp.add_argument("--seed", default=None)
    sp.add_argument("--workers", default=None)
    sp.add_argument("--max-frames", default=None)
    sp.add_argument("--max-frame-errors", default=None)
    sp.add_argument("--max-iter", default=None)
    sp.add_argument("--prior-mode", default=None, choices=["empirical", "uniform", "explicit"])
    sp.add_argument("--out", type=Path, default=None, help="CSV output (defaults to repo data/)")
    sp.add_argument("--verbose", action="store_true", help="Progress bars and per-point summaries")

    # llps command
    lp = sub.add_parser("llps", help="Exhaustive minimum parity-weight shaping for small ell")
    _add_code_args(lp)
    _add_shaping_args(lp)
    lp.add_argument("--in", dest="in_path", required=True, type=Path, help="Message bits, one vector per line")
    lp.add_argument("--cap", type=int, default=LLPS_MAX_ELL)

    return p


def _bits(v: np.ndarray) -> str:
    return "".join(str(int(b)) for b in v)


def _profile(weights) -> str:
    return ",".join(f"{w}:{c}" for w, c in weight_profile(weights))


def cmd_codeinfo(args) -> int:
    code = load_code(args.code, parse_index_list(args.puncture), args.format)
    print(f"n_c={code.n_c}")
    print(f"k_c={code.k_c}")
    print(f"rank={rank(code.h)}")
    print(f"rate={code.rate:.6f}")
    print(f"punctured={len(code.puncture_set)}")
    print(f"row_weights={_profile(code.h.row_weights())}")
    print(f"col_weights={_profile(code.h.col_weights())}")
    return 0


def cmd_dm(args) -> int:
    cb = _codebook(args)
    vectors = read_bit_lines(args.in_path)
    width = cb.k_in if args.direction == "match" else cb.comp.n_out
    for lineno, v in enumerate(vectors, start=1):
        if v.size != width:
            raise CompositionError(f"{args.in_path}: line {lineno} has {v.size} bits, expected {width}")
    rows = np.array(vectors, dtype=np.uint8).reshape(len(vectors), width)
    if not vectors:
        out = []
    elif args.direction == "match":
        out = list(dm_match_many(cb, rows))
    else:
        out = list(dm_dematch_many(cb, rows))
    write_bit_lines(args.out_path, out)
    if args.verbose:
        print(
            f"[dm] {args.direction} n_out={cb.comp.n_out} n_ones={cb.comp.n_ones} k_in={cb.k_in} "
            f"rate={cb.rate:.4f} loss={cb.rate_loss:.4f} lines={len(out)}"
        )
    print(f"Wrote {args.out_path}")
    return 0


def cmd_encode(args) -> int:
    code, spec = _load_shaping(args)
    graph = build_shaping_graph(code, spec)
    results = [shape_encode(graph, v, spec) for v in read_bit_lines(args.in_path)]
    write_bit_lines(args.out_path, [r.codeword for r in results])
    if args.trace is not None:
        args.trace.parent.mkdir(parents=True, exist_ok=True)
        with args.trace.open("w", encoding="utf-8", newline="") as f:
            w = csv.writer(f)
            w.writerow(["iteration", "position", "tilde", "bit", "guess"])
            for r in results:
                for i, step in enumerate(r.decision_trace, start=1):
                    w.writerow([i, step.position, f"{step.tilde:g}", step.bit, int(step.guess)])
        print(f"Wrote {args.trace}")
    if args.verbose:
        print(f"[code] n_c={code.n_c} k_c={code.k_c} ell={spec.ell} positions={list(spec.positions)}")
        if results:
            parity = np.concatenate([parity_block(code, r.codeword) for r in results])
            frac = float(np.mean(parity == 0)) if parity.size else float("nan")
            color = GREEN if abs(frac - spec.target_p0) <= 0.05 else YELLOW
            print(f"{color}[encode] {len(results)} codewords, parity zero-fraction {frac:.4f}{RESET}")
    print(f"Wrote {args.out_path}")
    return 0


def cmd_decode(args) -> int:
    code, spec = _load_shaping(args)
    decoder = BpDecoder(code.h, max_iter=args.max_iter)
    graph = build_shaping_graph(code, spec) if args.check else None
    messages = []
    failures = 0
    for llr in read_llr_frames(args.in_path, code.n_c):
        res = decoder.decode(llr)
        u = code.to_systematic_order(res.hard_bits)[: code.k_c]
        messages.append(u[spec.message_positions(code.k_c)])
        line = f"converged={int(res.converged)} iterations={res.iterations_used}"
        if graph is not None:
            line += f" reencode={int(reencode_check(code, spec, u, graph))}"
        failures += not res.converged
        print(line)
    write_bit_lines(args.out_path, messages)
    if args.verbose:
        color = GREEN if failures == 0 else RED
        print(f"{color}[decode] {len(messages)} frames, {failures} not converged{RESET}")
    print(f"Wrote {args.out_path}")
    return 0


def cmd_capacity(args) -> int:
    print(f"{baseline_snr(args.rate, args.dist, args.code_rate):.3f}")
    return 0


def cmd_simulate(args) -> int:
    overrides = {
        "code": args.code,
        "snr_db": args.snr_db,
        "seed": args.seed,
        "workers": args.workers,
        "max_frames": args.max_frames,
        "max_frame_errors": args.max_frame_errors,
        "max_iter": args.max_iter,
        "prior_mode": args.prior_mode,
    }
    cfg = load_config(args.config, overrides)
    out = args.out
    if out is None:
        out = find_repo_root(Path.cwd()) / "data" / "sim_results.csv"
    records = run_campaign(cfg, verbose=args.verbose)
    write_records(out, records)
    print(f"Wrote {out}")
    return 0


def cmd_llps(args) -> int:
    code, spec = _load_shaping(args)
    graph = build_shaping_graph(code, spec)
    for v in read_bit_lines(args.in_path):
        bits, weight = llps_exact(code, v, spec, cap=args.cap)
        enc = shape_encode(graph, v, spec)
        enc_weight = int(parity_block(code, enc.codeword).sum())
        print(f"llps={_bits(bits)} weight={weight} encoder={_bits(enc.shaping_bits)} encoder_weight={enc_weight}")
    return 0


COMMANDS = {
    "codeinfo": cmd_codeinfo,
    "dm": cmd_dm,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "capacity": cmd_capacity,
    "simulate": cmd_simulate,
    "llps": cmd_llps,
}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (AlistFormatError, BaseMatrixFormatError, InputFormatError, DimensionError)):
        return EXIT_FORMAT
    if isinstance(exc, (StructuralError, PunctureError, ShapingPositionError)):
        return EXIT_STRUCTURE
    if isinstance(exc, (CompositionError, OutOfCodebookError)):
        return EXIT_DM
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_OTHER


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = argv or sys.argv[1:]
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except (ValueError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return exit_code_for(e)


if __name__ == "__main__":
    raise SystemExit(main())
