#!/usr/bin/env python3
"""Run the four standard horizon sweeps (call/put x S0 60/140) to CSV.

Desk scale by default (fast, noisier); --full uses the reference settings
(M=1000, 10000 paths, 100 runs, horizons up to 128 years) and takes a while.
"""

import argparse

from dynkin.cli import main as dynkin_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--full", action="store_true", help="reference-scale settings")
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--prefix", default="sweep", help="output file prefix")
    args = ap.parse_args()

    if args.full:
        scale = ["--steps", "1000", "--paths", "10000", "--runs", "100", "--q-max", "8"]
    else:
        scale = ["--steps", "250", "--paths", "4000", "--runs", "10", "--q-max", "6"]

    for kind in ("call", "put"):
        for s0 in ("60", "140"):
            out = f"{args.prefix}_{kind}_{s0}.csv"
            argv = [
                "sweep", "--kind", kind, "--s0", s0,
                "--seed", str(args.seed), "--threads", str(args.threads),
                "--out", out, *scale,
            ]
            print(f"dynkin {' '.join(argv)}")
            code = dynkin_main(argv)
            if code != 0:
                raise SystemExit(code)
            print(f"  -> {out}")


if __name__ == "__main__":
    main()
