"""Analytic guarantee, worst-case expected profit and LP value for each maxmin mechanism.

    python scripts/reproduce_guarantees.py [--grid 31]
"""

import argparse

from maxmin_trade.calibration import eval_h1_h2, maxmin_mechanism
from maxmin_trade.cli import paired_distribution
from maxmin_trade.core import DoublePostedPrice, Expectations, evaluate, mechanism_name
from maxmin_trade.distributions import build_det_worst_case, expectation
from maxmin_trade.verification import analytic_guarantee, augmented_lattice, lp_adversary, support_extras

CASES = [
    Expectations(7 / 8, 1 / 8),
    Expectations(0.75, 0.25),
    Expectations(*eval_h1_h2(0.5, 0.3)),
    Expectations(0.8, 0.1),
    Expectations(1.0, 0.2),
]


def row(mech, exp, dist, grid_n):
    g = analytic_guarantee(mech)
    saddle = expectation(dist, lambda b, s: evaluate(mech, b, s).t) if dist is not None else float("nan")
    grid = augmented_lattice(grid_n, support_extras(dist) if dist is not None else ())
    _, lp = lp_adversary(mech, exp, grid)
    print(f"{exp.m_b:9.6f} {exp.m_s:9.6f}  {mechanism_name(mech):20s} {g:.12f} {saddle:.12f} {lp:.12f}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--grid", type=int, default=31)
    args = ap.parse_args()
    print(f"{'m_b':>9s} {'m_s':>9s}  {'mechanism':20s} {'guarantee':14s} {'E_worst[t]':14s} {'LP value':14s}")
    for exp in CASES:
        mech, _ = maxmin_mechanism(exp)
        row(mech, exp, paired_distribution(mech), args.grid)
    det = DoublePostedPrice(7 / 8, 1 / 8)
    row(det, CASES[0], build_det_worst_case(7 / 8, 1 / 8), args.grid)


if __name__ == "__main__":
    main()
