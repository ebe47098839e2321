"""Domain types for robust bilateral trade and the mechanism dispatcher.

Values are normalised to [0, 1]; the buyer's value is ``v_b`` (bid ``b``) and
the seller's value is ``v_s`` (ask ``a``).  Every function accepts scalars or
numpy arrays and broadcasts.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

EPS_SYM = 1e-12
EPS_LIM = 1e-6
# deterministic thresholds treat gaps below this as "on the boundary"
BOUNDARY_EPS = 1e-12


class MaxminError(Exception):
    """Base class for all package errors."""

    reason = "error"


class ConfigurationError(MaxminError, ValueError):
    reason = "configuration"


class DomainError(MaxminError, ValueError):
    reason = "domain"


class RegimeError(MaxminError):
    reason = "regime"


class InfeasibilityError(MaxminError):
    reason = "infeasible"


class ConvergenceError(MaxminError):
    """Raised when a solver stops short of its tolerance; ``best`` holds the best iterate."""

    reason = "convergence"

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class QuadratureError(ConvergenceError):
    reason = "quadrature"


class Regime(str, enum.Enum):
    TRIVIAL = "trivial"
    SELLER_ZERO = "seller_zero"
    EDGE_BUYER_ONE = "edge_buyer_one"
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"


@dataclass(frozen=True)
class Expectations:
    """What the designer knows: the two expected values."""

    m_b: float
    m_s: float

    def __post_init__(self):
        for name in ("m_b", "m_s"):
            val = getattr(self, name)
            if not np.isfinite(val) or not 0.0 <= val <= 1.0:
                raise ConfigurationError(f"{name}={val!r} outside [0, 1]")

    def regime(self, eps_sym: float = EPS_SYM, force_asymmetric: bool = False) -> Regime:
        m_b, m_s = self.m_b, self.m_s
        if m_b <= m_s:
            return Regime.TRIVIAL
        if m_s == 0.0:
            return Regime.SELLER_ZERO
        if m_b == 1.0:
            return Regime.EDGE_BUYER_ONE
        if not force_asymmetric and abs(m_b + m_s - 1.0) <= eps_sym:
            return Regime.SYMMETRIC
        return Regime.ASYMMETRIC


@dataclass(frozen=True)
class ValueProfile:
    v_b: float
    v_s: float

    def __post_init__(self):
        if not (0.0 <= self.v_b <= 1.0 and 0.0 <= self.v_s <= 1.0):
            raise DomainError(f"value profile ({self.v_b}, {self.v_s}) outside [0,1]^2")

    def __iter__(self):
        yield self.v_b
        yield self.v_s


@dataclass(frozen=True)
class MechanismOutcome:
    """Trade probability, buyer payment, seller transfer and intermediary profit."""

    q: ArrayLike
    t_b: ArrayLike
    t_s: ArrayLike
    t: ArrayLike

    @classmethod
    def from_payments(cls, q, t_b, t_s) -> "MechanismOutcome":
        return cls(q=q, t_b=t_b, t_s=t_s, t=t_b - t_s)


# ---------------------------------------------------------------------------
# Mechanism tags


def _open_unit(name, val):
    if not (np.isfinite(val) and 0.0 < val < 1.0):
        raise ConfigurationError(f"{name}={val!r} must lie in (0, 1)")


def _det_params(m_b, m_s):
    if not (0.0 < m_s < m_b < 1.0):
        raise ConfigurationError(f"deterministic mechanism needs 0 < m_s < m_b < 1, got ({m_b}, {m_s})")


@dataclass(frozen=True)
class RDA:
    """Random double auction with fixed commission fee ``r``."""

    r: float

    def validate(self):
        _open_unit("r", self.r)


@dataclass(frozen=True)
class Logarithmic:
    r1: float
    r2: float

    def validate(self):
        _open_unit("r1", self.r1)
        _open_unit("r2", self.r2)
        if self.r1 + self.r2 == 1.0:
            raise ConfigurationError("logarithmic mechanism requires r1 + r2 != 1")


@dataclass(frozen=True)
class LinearDet:
    m_b: float
    m_s: float

    def validate(self):
        _det_params(self.m_b, self.m_s)


@dataclass(frozen=True)
class DoublePostedPrice:
    m_b: float
    m_s: float

    def validate(self):
        _det_params(self.m_b, self.m_s)


@dataclass(frozen=True)
class EfficientOnSupport:
    """Trades with certainty whenever ``bid - ask > r``."""

    r: float

    def validate(self):
        _open_unit("r", self.r)


@dataclass(frozen=True)
class EdgeBuyerOne:
    """Mechanism for a buyer whose value is known to be 1; only a bid of 1 trades."""

    iota: float

    def validate(self):
        _open_unit("iota", self.iota)


@dataclass(frozen=True)
class NeverTrade:
    def validate(self):
        pass


@dataclass(frozen=True)
class Perturbed:
    """A deliberately broken copy of ``base`` used to test that checks can fail.

    Buyer payments are multiplied by ``buyer_scale``, seller transfers by
    ``seller_scale``, and the bid is shifted down by ``shift`` before the base
    mechanism sees it.
    """

    base: object
    buyer_scale: float = 1.0
    seller_scale: float = 1.0
    shift: float = 0.0

    def validate(self):
        self.base.validate()


Mechanism = Union[
    RDA, Logarithmic, LinearDet, DoublePostedPrice, EfficientOnSupport, EdgeBuyerOne, NeverTrade, Perturbed
]

MECHANISM_NAMES = {
    "rda": RDA,
    "logarithmic": Logarithmic,
    "linear-det": LinearDet,
    "double-posted": DoublePostedPrice,
    "efficient-on-support": EfficientOnSupport,
    "edge-buyer-one": EdgeBuyerOne,
    "never-trade": NeverTrade,
}


def mechanism_name(mech) -> str:
    for name, cls in MECHANISM_NAMES.items():
        if type(mech) is cls:
            return name
    if isinstance(mech, Perturbed):
        return "perturbed-" + mechanism_name(mech.base)
    raise ConfigurationError(f"unknown mechanism {mech!r}")


def _as_unit(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return arr


def evaluate(mech, bid: ArrayLike, ask: ArrayLike) -> MechanismOutcome:
    """Evaluate ``mech`` at the report pair (bid, ask).

    Scalars in give Python floats out; arrays broadcast.
    """
    from . import mechanisms as m

    if not hasattr(mech, "validate"):
        raise ConfigurationError(f"not a mechanism: {mech!r}")
    mech.validate()
    scalar = np.ndim(bid) == 0 and np.ndim(ask) == 0
    b = _as_unit(bid, "bid")
    a = _as_unit(ask, "ask")
    b, a = np.broadcast_arrays(b, a)

    if isinstance(mech, RDA):
        out = m.rda_outcome(mech.r, b, a)
    elif isinstance(mech, Logarithmic):
        out = m.log_outcome(mech.r1, mech.r2, b, a)
    elif isinstance(mech, LinearDet):
        out = m.linear_det_outcome(mech.m_b, mech.m_s, b, a)
    elif isinstance(mech, DoublePostedPrice):
        out = m.double_posted_outcome(mech.m_b, mech.m_s, b, a)
    elif isinstance(mech, EfficientOnSupport):
        out = m.efficient_on_support_outcome(mech.r, b, a)
    elif isinstance(mech, EdgeBuyerOne):
        edge = m.edge_buyer_one_outcome(mech.iota, a)
        on = b == 1.0
        out = MechanismOutcome.from_payments(
            np.where(on, edge.q, 0.0), np.where(on, edge.t_b, 0.0), np.where(on, edge.t_s, 0.0)
        )
    elif isinstance(mech, NeverTrade):
        z = np.zeros(b.shape)
        out = MechanismOutcome(q=z, t_b=z, t_s=z, t=z)
    elif isinstance(mech, Perturbed):
        base = evaluate(mech.base, np.clip(b - mech.shift, 0.0, 1.0), a)
        out = MechanismOutcome.from_payments(
            base.q, mech.buyer_scale * np.asarray(base.t_b), mech.seller_scale * np.asarray(base.t_s)
        )
    else:
        raise ConfigurationError(f"unsupported mechanism {mech!r}")

    if scalar:
        return MechanismOutcome(q=float(out.q), t_b=float(out.t_b), t_s=float(out.t_s), t=float(out.t))
    return out
