#!/usr/bin/env python3
"""Plot horizon-sweep CSVs produced by `dynkin sweep`.

Example:
    dynkin sweep --kind call --s0 140 --out call140.csv
    python scripts/plot_sweep.py call140.csv --out call140.png
"""

import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_rows(path):
    with open(path, newline="") as fh:
        return [
            (float(r["T"]), float(r["value"]), float(r["std_error"]), float(r["perpetual"]))
            for r in csv.DictReader(fh)
        ]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csvs", nargs="+", help="sweep CSV files")
    ap.add_argument("--out", default="sweep.png", help="output image path")
    args = ap.parse_args()

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path in args.csvs:
        rows = read_rows(path)
        horizons = [r[0] for r in rows]
        values = [r[1] for r in rows]
        errs = [3 * r[2] for r in rows]
        ax.errorbar(horizons, values, yerr=errs, marker="o", capsize=3, label=path)
        ax.axhline(rows[-1][3], linestyle=":", linewidth=1)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("horizon T (years)")
    ax.set_ylabel("value")
    ax.set_title("finite-horizon values vs the perpetual benchmark (dotted)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
