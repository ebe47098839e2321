"""Closed-form trading, payment and transfer rules, plus a spread simulator.

All outcome functions are vectorised over (bid, ask).  Trading regions are
open: a profile exactly on the boundary does not trade.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    BOUNDARY_EPS,
    EPS_LIM,
    RDA,
    ConfigurationError,
    Logarithmic,
    MechanismOutcome,
    RegimeError,
)


def rda_outcome(r, bid, ask) -> MechanismOutcome:
    """Random double auction: linear trading rule, quadratic payments."""
    b = np.asarray(bid, dtype=float)
    a = np.asarray(ask, dtype=float)
    trade = b - a > r
    scale = 1.0 / (1.0 - r)
    q = np.where(trade, (b - a - r) * scale, 0.0)
    t_b = np.where(trade, 0.5 * scale * (b * b - (a + r) ** 2), 0.0)
    t_s = np.where(trade, 0.5 * scale * ((b - r) ** 2 - a * a), 0.0)
    return MechanismOutcome.from_payments(q, t_b, t_s)


def _log_terms(r1, r2, b, a):
    delta = 1.0 - r1 - r2
    if abs(delta) <= EPS_LIM:
        raise RegimeError(
            f"|1 - r1 - r2| = {abs(delta):.3g} is on the seam; use the random double auction with r = r1"
        )
    log_ratio = np.log(1.0 - r2) - np.log(r1)
    buyer_arg = (delta * b + r1 * r2) / (1.0 - r1)
    seller_arg = delta / r2 * a + r1
    return delta, log_ratio, buyer_arg, seller_arg


def log_outcome(r1, r2, bid, ask) -> MechanismOutcome:
    b = np.asarray(bid, dtype=float)
    a = np.asarray(ask, dtype=float)
    delta, L, A, B = _log_terms(r1, r2, b, a)
    trade = r2 * b - (1.0 - r1) * a > r1 * r2
    diff = np.log(A) - np.log(B)
    common = -r1 * r2 / (delta * L) * diff
    q = np.where(trade, np.clip(diff / L, 0.0, 1.0), 0.0)
    t_b = np.where(trade, common + (b - (1.0 - r1) / r2 * a - r1) / L, 0.0)
    t_s = np.where(trade, common + (r2 / (1.0 - r1) * b - a - r1 * r2 / (1.0 - r1)) / L, 0.0)
    return MechanismOutcome.from_payments(q, t_b, t_s)


def deterministic_thresholds(m_b, m_s):
    """Return (sqrt(1-m_b), sqrt(m_s)); raises when the deterministic guarantee is zero."""
    sb = np.sqrt(1.0 - m_b)
    ss = np.sqrt(m_s)
    if not sb + ss < 1.0:
        raise RegimeError(
            "sqrt(m_s) + sqrt(1 - m_b) >= 1: deterministic guarantee is zero, use NeverTrade"
        )
    return sb, ss


def linear_det_outcome(m_b, m_s, bid, ask) -> MechanismOutcome:
    b = np.asarray(bid, dtype=float)
    a = np.asarray(ask, dtype=float)
    sb, ss = deterministic_thresholds(m_b, m_s)
    c1 = 1.0 - sb
    trade = (ss * b - sb * a) - ss * c1 > BOUNDARY_EPS
    q = trade.astype(float)
    t_b = np.where(trade, c1 + sb / ss * a, 0.0)
    t_s = np.where(trade, ss / sb * (b - c1), 0.0)
    return MechanismOutcome.from_payments(q, t_b, t_s)


def double_posted_outcome(m_b, m_s, bid, ask) -> MechanismOutcome:
    b = np.asarray(bid, dtype=float)
    a = np.asarray(ask, dtype=float)
    sb, ss = deterministic_thresholds(m_b, m_s)
    c1 = 1.0 - sb
    trade = (b - c1 > BOUNDARY_EPS) & (ss - a > BOUNDARY_EPS)
    q = trade.astype(float)
    t_b = np.where(trade, c1, 0.0)
    t_s = np.where(trade, ss, 0.0)
    return MechanismOutcome.from_payments(q, t_b, t_s)


def efficient_on_support_outcome(r, bid, ask) -> MechanismOutcome:
    # envelope payments of an indicator: buyer pays ask + r, seller gets bid - r
    b = np.asarray(bid, dtype=float)
    a = np.asarray(ask, dtype=float)
    trade = b - a > r
    q = trade.astype(float)
    t_b = np.where(trade, a + r, 0.0)
    t_s = np.where(trade, b - r, 0.0)
    return MechanismOutcome.from_payments(q, t_b, t_s)


def edge_buyer_one_outcome(iota, ask) -> MechanismOutcome:
    """Outcome when the buyer's value (and bid) is 1; depends on the ask only."""
    a = np.asarray(ask, dtype=float)
    trade = a < 1.0 - iota
    a_in = np.where(trade, a, 0.0)
    log_iota = np.log(iota)
    log_gap = np.log1p(-a_in)
    q = np.where(trade, 1.0 - log_gap / log_iota, 0.0)
    t_s = np.where(trade, 1.0 + (1.0 - iota - log_gap - a_in) / log_iota, 0.0)
    return MechanismOutcome.from_payments(q, q.copy(), t_s)


# ---------------------------------------------------------------------------
# ex-post implementation with a random spread


@dataclass(frozen=True)
class SpreadExecution:
    """One (or many, if the fields are arrays) realised executions.

    The buyer pays ``price + buyer_fee`` and the seller receives
    ``price - seller_fee``; the intermediary keeps both fees.
    """

    traded: object
    price: object
    buyer_fee: object
    seller_fee: object

    @property
    def buyer_payment(self):
        return self.price + self.buyer_fee

    @property
    def seller_receipt(self):
        return self.price - self.seller_fee

    @property
    def profit(self):
        return self.buyer_fee + self.seller_fee


def simulate_spread_execution(mech, bid, ask, rng_seed=None, n=None) -> SpreadExecution:
    """Draw a random spread and execute the auction protocol at (bid, ask).

    With ``n=None`` a single execution with scalar fields is returned,
    otherwise ``n`` independent executions as arrays.  ``rng_seed`` may be an
    int, a ``SeedSequence`` or a ``Generator``.
    """
    rng = np.random.default_rng(rng_seed)
    size = 1 if n is None else int(n)
    u = rng.random(size)
    b = float(bid)
    a = float(ask)

    if isinstance(mech, RDA):
        mech.validate()
        r = mech.r
        spread = r + (1.0 - r) * u
        traded = b - a > spread
        price = np.where(traded, 0.5 * (b + a), 0.0)
        fee = np.where(traded, 0.5 * r, 0.0)
        out = SpreadExecution(traded, price, fee, fee.copy())
    elif isinstance(mech, Logarithmic):
        mech.validate()
        r1, r2 = mech.r1, mech.r2
        delta, L, A, B = _log_terms(r1, r2, b, a)
        b_t = np.log(A) / L
        a_t = np.log(B) / L
        traded = b_t - a_t > u
        # (1-r2)/r1 raised to a' + s'
        fee_level = B * np.exp(L * u)
        price = np.where(traded, r2 / delta * (fee_level - r1), 0.0)
        buyer_fee = np.where(traded, fee_level, 0.0)
        out = SpreadExecution(traded, price, buyer_fee, np.zeros(size))
    else:
        raise ConfigurationError(f"no spread implementation for {type(mech).__name__}")

    if n is None:
        return SpreadExecution(
            bool(out.traded[0]), float(out.price[0]), float(out.buyer_fee[0]), float(out.seller_fee[0])
        )
    return out
