#!/usr/bin/env python3
"""Accuracy / MSE vs training-set size with seeded repeats (mean +- std)."""

import argparse
from pathlib import Path

from scdt_sysid.experiments import ClassifierConfig, learning_curve, write_curve_csv


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", required=True, help="dataset directory (see scdt-sysid dataset)")
    ap.add_argument("--sizes", default="16,32,64,128,200")
    ap.add_argument("--repeats", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--method", choices=["nls", "ns"], default="nls")
    ap.add_argument("--k-candidates", default="1,2,4,8,16")
    ap.add_argument("--out", default=None, help="CSV path (default: <data>/curve_<method>.csv)")
    args = ap.parse_args()

    cands = tuple(int(v) for v in args.k_candidates.split(","))
    config = ClassifierConfig(
        method=args.method, k_candidates=cands if args.method == "nls" else None
    )
    sizes = [int(v) for v in args.sizes.split(",")]
    points = learning_curve(args.data, sizes, repeats=args.repeats, config=config, seed=args.seed)
    for p in points:
        msg = f"size={p.size:5d} accuracy={p.mean_accuracy:.4f} +- {p.std_accuracy:.4f}"
        if p.mean_mse is not None:
            msg += f"  mse={p.mean_mse:.3e} +- {p.std_mse:.3e}"
        print(msg)
    out = Path(args.out) if args.out else Path(args.data) / f"curve_{args.method}.csv"
    write_curve_csv(points, out)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
