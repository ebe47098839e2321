"""Wall time and agreement of the triple-enumeration LP against HiGHS.

    python scripts/lp_adversary_benchmark.py [--sizes 11,21,31,41,51]
"""

import argparse
import time

from maxmin_trade.core import RDA, Expectations, Logarithmic
from maxmin_trade.calibration import eval_h1_h2
from maxmin_trade.verification import augmented_lattice, lp_adversary

CASES = [
    (RDA(0.5), Expectations(7 / 8, 1 / 8)),
    (Logarithmic(0.5, 0.3), Expectations(*eval_h1_h2(0.5, 0.3))),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="11,21,31,41,51")
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    # warm the compiled kernel so the first row is not a compile time
    lp_adversary(*CASES[0], augmented_lattice(5))
    print(f"{'mechanism':12s} {'grid':>5s} {'points':>7s} {'enum s':>8s} {'highs s':>8s} {'enum value':>18s} {'|diff|':>9s}")
    for mech, exp in CASES:
        for n in sizes:
            grid = augmented_lattice(n)
            t0 = time.perf_counter()
            _, v1 = lp_adversary(mech, exp, grid)
            t1 = time.perf_counter()
            _, v2 = lp_adversary(mech, exp, grid, method="linprog")
            t2 = time.perf_counter()
            name = type(mech).__name__
            print(f"{name:12s} {n:5d} {len(grid):7d} {t1 - t0:8.3f} {t2 - t1:8.3f} {v1:18.15f} {abs(v1 - v2):9.2e}")


if __name__ == "__main__":
    main()
