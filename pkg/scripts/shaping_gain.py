#!/usr/bin/env python3
from __future__ import annotations

import argparse
import math
from dataclasses import replace
from pathlib import Path
from typing import Tuple

from codes import CLASS_PARITY
from simulate import (
    GREEN,
    RED,
    RESET,
    YELLOW,
    calibrate,
    load_config,
    prepare_link,
    run_campaign,
    snr_at_fer,
    write_records,
)


def parity_fidelity(cfg, p0: float, frames: int) -> Tuple[float, float]:
    """Parity zero-fraction and guessed-decision share with ell from the entropy budget, encoder only."""
    link = prepare_link(replace(cfg, target_p0=p0, ell=None, positions=None, dm=False, dm_k_in=None))
    calib = calibrate(link, frames)
    return calib.empirical[CLASS_PARITY], calib.guess_fraction


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="Compare a shaped and a uniform campaign at a target FER.")
    ap.add_argument("--shaped", dest="shaped_cfg", default="data/campaign_qc_shaped.conf", type=Path)
    ap.add_argument("--uniform", dest="uniform_cfg", default="data/campaign_qc_uniform.conf", type=Path)
    ap.add_argument("--target-fer", type=float, default=1e-2)
    ap.add_argument("--min-gain", type=float, default=0.6, help="Gain in dB reported as a pass")
    ap.add_argument("--out-dir", type=Path, default=Path("data"))
    ap.add_argument("--fidelity-p0", default="0.75,0.83", help="Targets for the parity-distribution check")
    ap.add_argument("--fidelity-frames", type=int, default=400)
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args(argv)

    shaped_cfg = load_config(args.shaped_cfg)
    uniform_cfg = load_config(args.uniform_cfg)
    shaped = run_campaign(shaped_cfg, verbose=args.verbose)
    uniform = run_campaign(uniform_cfg, verbose=args.verbose)
    for name, recs in (("shaped", shaped), ("uniform", uniform)):
        path = args.out_dir / f"gain_{name}.csv"
        write_records(path, recs)
        print(f"Wrote {path}")

    s_snr = snr_at_fer(shaped, args.target_fer)
    u_snr = snr_at_fer(uniform, args.target_fer)
    print(f"[sim] FER {args.target_fer:g}: shaped {s_snr:.3f} dB, uniform {u_snr:.3f} dB")
    if math.isnan(s_snr) or math.isnan(u_snr):
        print(f"{YELLOW}[sim] a curve does not cross FER {args.target_fer:g}; widen its snr_db range{RESET}")
    else:
        gain = u_snr - s_snr
        color = GREEN if gain >= args.min_gain else RED
        print(f"{color}[sim] shaping gain {gain:.3f} dB (bar {args.min_gain} dB){RESET}")

    frames = sum(r.frames for r in shaped)
    if frames:
        parity_p0 = sum(r.p0_parity * r.frames for r in shaped) / frames
        shortfall = shaped_cfg.target_p0 - parity_p0
        color = GREEN if abs(shortfall) <= 0.05 else RED
        print(
            f"{color}[sim] parity zero-fraction {parity_p0:.4f} target {shaped_cfg.target_p0} "
            f"shortfall {shortfall:+.4f}{RESET}"
        )

    for p0 in (float(p) for p in args.fidelity_p0.split(",") if p.strip()):
        frac, guessed = parity_fidelity(shaped_cfg, p0, args.fidelity_frames)
        color = GREEN if abs(frac - p0) <= 0.05 else YELLOW
        print(
            f"{color}[sim] target p0={p0} ell=auto parity zero-fraction {frac:.4f} "
            f"shortfall {p0 - frac:+.4f} guessed decisions {guessed:.3f}{RESET}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
