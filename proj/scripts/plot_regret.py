#!/usr/bin/env python3
"""Log-log plot of mean regret against T from a bench summary.csv."""

import argparse
import csv
import math
from collections import defaultdict


def load(path):
    rows = defaultdict(list)
    with open(path, newline="") as f:
        for r in csv.DictReader(f):
            rows[r["algo"]].append((int(r["T"]), float(r["mean"]), float(r["stderr"])))
    return {k: sorted(v) for k, v in rows.items()}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("summary", help="summary.csv written by `rsbandit bench`")
    ap.add_argument("--out", default="regret.png")
    ap.add_argument("--algos", nargs="*", help="subset of algorithms to draw")
    args = ap.parse_args()

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = load(args.summary)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for name, pts in data.items():
        if args.algos and name not in args.algos:
            continue
        pts = [p for p in pts if p[1] > 0]  # log scale drops non-positive means
        if not pts:
            continue
        ts, means, ses = zip(*pts)
        ax.errorbar(ts, means, yerr=[2 * s for s in ses], marker="o", capsize=3, label=name)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("T")
    ax.set_ylabel("mean regret")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
