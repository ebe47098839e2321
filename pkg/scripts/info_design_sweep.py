"""Traders' total gain from the efficient-on-support mechanism across symmetric(r).

    python scripts/info_design_sweep.py [--points 19] [--csv out.csv]
"""

import argparse

import numpy as np

from maxmin_trade.simulation import info_design_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=19)
    ap.add_argument("--csv", default=None)
    args = ap.parse_args()
    r_grid = np.linspace(0, 1, args.points + 2)[1:-1]
    rows = info_design_sweep(r_grid)
    lines = ["r,total_gain,closed_form"]
    for r, g in rows:
        lines.append(f"{r:.6f},{g:.12f},{2 * r * (1 - r):.12f}")
    text = "\n".join(lines) + "\n"
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(text)
    print(text, end="")
    best = max(rows, key=lambda row: row[1])
    print(f"# argmax r = {best[0]:.6f}, gain = {best[1]:.12f}")


if __name__ == "__main__":
    main()
