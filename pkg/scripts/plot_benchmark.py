#!/usr/bin/env python3
"""Render benchmark.csv (per-step medians with 1-sigma bands) to PNG.

Usage: python scripts/plot_benchmark.py out/benchmark.csv [out/benchmark.png]
"""

import csv
import sys


def main() -> int:
    if len(sys.argv) < 2:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    src = sys.argv[1]
    dst = sys.argv[2] if len(sys.argv) > 2 else src.rsplit(".", 1)[0] + ".png"

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib is not installed; `pip install matplotlib`", file=sys.stderr)
        return 1

    with open(src, newline="") as fh:
        rows = list(csv.DictReader(fh))
    steps = [int(r["step"]) for r in rows]

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for ax, metric, label in ((ax1, "rmse", "RMSE"), (ax2, "mi", "per-step MI (bits)")):
        med = [float(r[f"{metric}_median"]) for r in rows]
        lo = [float(r[f"{metric}_lo"]) for r in rows]
        hi = [float(r[f"{metric}_hi"]) for r in rows]
        ax.plot(steps, med, marker="o", markersize=3)
        ax.fill_between(steps, lo, hi, alpha=0.25)
        ax.set_xlabel("interaction")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(dst, dpi=120)
    print(f"wrote {dst}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
