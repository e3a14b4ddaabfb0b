#!/usr/bin/env python3
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from codes import build_code, dump_base_matrix, format_index_list, lift_base_matrix, random_base_matrix, to_alist
from gf2 import rank


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="Generate a random quasi-cyclic LDPC code (base matrix or alist).")
    ap.add_argument("--rows", type=int, default=6, help="Base-matrix rows")
    ap.add_argument("--cols", type=int, default=24, help="Base-matrix columns")
    ap.add_argument("--lift", type=int, default=44, help="Circulant size Z")
    ap.add_argument("--column-weight", type=int, default=3)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--alist", action="store_true", help="Write the lifted matrix as alist instead")
    ap.add_argument(
        "--puncture",
        type=int,
        default=0,
        help="Print a puncture entry for the first N systematic positions (shaping bits go there by default)",
    )
    ap.add_argument("--out", type=Path, default=Path("data/qc_r34.base"))
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    base = random_base_matrix(args.rows, args.cols, args.lift, rng, column_weight=args.column_weight)
    h = lift_base_matrix(base)
    code = build_code(h)
    if not 0 <= args.puncture <= code.k_c:
        ap.error(f"--puncture must lie in [0, {code.k_c}]")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(to_alist(h) if args.alist else dump_base_matrix(base))
    print(f"[code] n_c={code.n_c} k_c={code.k_c} rank={rank(h)} rate={code.rate:.4f}")
    if args.puncture:
        tx = code.n_c - args.puncture
        print(f"[code] transmitted={tx} rate over transmitted bits={code.k_c / tx:.4f}")
        print(f"puncture = {format_index_list(code.perm[: args.puncture])}")
    print(f"Wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
