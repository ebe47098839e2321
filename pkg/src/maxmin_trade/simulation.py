"""Monte Carlo profit estimates and welfare accounting under a fixed distribution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, EfficientOnSupport, NeverTrade, evaluate
from .distributions import build_symmetric_triangular, expectation, first_best_gain, sample


def seed_streams(master_seed, n_streams: int):
    """Independent child seeds derived deterministically from one master seed."""
    return np.random.SeedSequence(master_seed).spawn(int(n_streams))


def monte_carlo_profit(mech, dist, n: int, rng_seed=None) -> tuple[float, float]:
    """Sample mean of the intermediary profit and its plug-in standard error."""
    n = int(n)
    if n < 1:
        raise ConfigurationError("n must be positive")
    if isinstance(mech, NeverTrade):
        return 0.0, 0.0
    draws = sample(dist, n, rng_seed)
    t = np.asarray(evaluate(mech, draws[:, 0], draws[:, 1]).t, dtype=float)
    mean = float(t.mean())
    stderr = float(t.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    return mean, stderr


@dataclass(frozen=True)
class WelfareBreakdown:
    intermediary: float
    buyer_surplus: float
    seller_surplus: float
    total_gain: float
    first_best: float

    def as_dict(self) -> dict:
        return {
            "intermediary": self.intermediary,
            "buyer_surplus": self.buyer_surplus,
            "seller_surplus": self.seller_surplus,
            "total_gain": self.total_gain,
            "first_best": self.first_best,
        }


def welfare_accounting(dist, mech) -> WelfareBreakdown:
    def out(v_b, v_s):
        return evaluate(mech, v_b, v_s)

    intermediary = expectation(dist, lambda b, s: out(b, s).t)
    buyer = expectation(dist, lambda b, s: (lambda o: b * o.q - o.t_b)(out(b, s)))
    seller = expectation(dist, lambda b, s: (lambda o: o.t_s - s * o.q)(out(b, s)))
    return WelfareBreakdown(
        intermediary=intermediary,
        buyer_surplus=buyer,
        seller_surplus=seller,
        total_gain=buyer + seller,
        first_best=first_best_gain(dist),
    )


def info_design_sweep(r_grid) -> list[tuple[float, float]]:
    """Traders' total gain when the efficient-on-support mechanism runs on symmetric(r)."""
    rows = []
    for r in r_grid:
        r = float(r)
        if not 0.0 < r < 1.0:
            raise ConfigurationError(f"r={r} must lie in (0, 1)")
        w = welfare_accounting(build_symmetric_triangular(r), EfficientOnSupport(r))
        rows.append((r, w.total_gain))
    return rows
