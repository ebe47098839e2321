"""Map the known expectations (M_B, M_S) to mechanism parameters.

The asymmetric moment functions are evaluated through

    H1 = (1 - r1)^2 * phi(x) + r1 (2 - r1),    H2 = r2^2 * phi(x),
    x = (1 - r1 - r2) / r1,  phi(x) = ((1 + x) log1p(x) - x) / x^2,

which is algebraically identical to the textbook closed forms but has no
0/0 at r1 + r2 = 1 (phi(0) = 1/2).  The raw closed forms and the seam
limits are kept for cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq
from scipy.special import xlogy

from .core import (
    EPS_LIM,
    RDA,
    ConfigurationError,
    ConvergenceError,
    DomainError,
    EdgeBuyerOne,
    Expectations,
    Logarithmic,
    NeverTrade,
    Regime,
    RegimeError,
)

TOL = 1e-10
MAX_ITER = 200
# brentq's own limits; the residual tolerance above is checked separately
_XTOL = 1e-15
_RTOL = 1e-15

_SERIES_CUTOFF = 0.1
_SERIES_TERMS = 40


def _phi(x: float) -> float:
    """((1 + x) log1p(x) - x) / x^2 for x >= -1, continuous at 0."""
    if x == -1.0:
        return 1.0
    if abs(x) < _SERIES_CUTOFF:
        total = 0.0
        power = 1.0
        for n in range(2, _SERIES_TERMS + 2):
            total += (-1) ** n * power / (n * (n - 1))
            power *= x
        return total
    return ((1.0 + x) * math.log1p(x) - x) / (x * x)


def eval_h1_h2(r1: float, r2: float) -> tuple[float, float]:
    """Expected buyer and seller values of the asymmetric triangular distribution."""
    if not (0.0 <= r1 <= 1.0 and 0.0 <= r2 <= 1.0):
        raise DomainError(f"(r1, r2)=({r1}, {r2}) outside [0,1]^2")
    if r2 == 1.0:
        return 1.0, 1.0
    if r1 == 0.0:
        return 0.0, 0.0
    if r1 == 1.0:
        return 1.0, float(xlogy(1.0 - r2, 1.0 - r2) + r2)
    if r2 == 0.0:
        return r1 - r1 * math.log(r1), 0.0
    p = _phi((1.0 - r1 - r2) / r1)
    return (1.0 - r1) ** 2 * p + r1 * (2.0 - r1), r2 * r2 * p


def h1_h2_closed_form(r1: float, r2: float) -> tuple[float, float]:
    """Direct evaluation of the closed forms; ill-conditioned near r1 + r2 = 1."""
    d = 1.0 - r1 - r2
    if d == 0.0:
        raise DomainError("closed form undefined on r1 + r2 = 1")
    L = math.log((1.0 - r2) / r1)
    h1 = (1.0 - r2) * r1 * (1.0 - r1) ** 2 / d**2 * L - r1 * r2 * (1.0 - r1) / d + r1
    h2 = r1 * (1.0 - r2) * r2**2 / d**2 * L - r1 * r2**2 / d
    return h1, h2


def h1_h2_seam_limit(r1: float) -> tuple[float, float]:
    """Limit of (H1, H2) as r2 -> 1 - r1."""
    return (1.0 - r1**2 + 2.0 * r1) / 2.0, (1.0 - r1) ** 2 / 2.0


# ---------------------------------------------------------------------------


def solve_r_symmetric(exp: Expectations) -> float:
    if exp.regime() is not Regime.SYMMETRIC:
        raise RegimeError(f"({exp.m_b}, {exp.m_s}) is not in the symmetric regime")
    return 1.0 - math.sqrt(1.0 - (exp.m_b - exp.m_s))


@dataclass(frozen=True)
class AsymmetricThresholds:
    r1: float
    r2: float
    residual_b: float
    residual_s: float
    # final bracket of the outer search over r2
    bracket: tuple[float, float] = (0.0, 1.0)


def _root(f, lo, hi, what):
    try:
        x, info = brentq(f, lo, hi, xtol=_XTOL, rtol=_RTOL, maxiter=MAX_ITER, full_output=True, disp=False)
    except ValueError as exc:
        raise ConvergenceError(f"{what}: no sign change on [{lo}, {hi}]") from exc
    if not info.converged:
        raise ConvergenceError(f"{what}: no convergence after {MAX_ITER} iterations", best=x)
    return x


def _inner_i(r2, m_b):
    return _root(lambda r1: eval_h1_h2(r1, r2)[0] - m_b, 0.0, 1.0, "I(r2)")


def _inner_j(r1, m_s):
    return _root(lambda r2: eval_h1_h2(r1, r2)[1] - m_s, 0.0, 1.0, "J(r1)")


def solve_asymmetric_thresholds(exp: Expectations, tol: float = TOL) -> AsymmetricThresholds:
    """Solve H1(r1, r2) = M_B and H2(r1, r2) = M_S by the nested fixed point J(I(r2)) = r2."""
    m_b, m_s = exp.m_b, exp.m_s
    if not (0.0 < m_s < m_b < 1.0):
        raise RegimeError(f"({m_b}, {m_s}) is not in the asymmetric regime")

    def gap(r2):
        return _inner_j(_inner_i(r2, m_b), m_s) - r2

    # seed at the symmetric answer r2 = 1 - r, then walk towards the sign change
    seed = math.sqrt(1.0 - (m_b - m_s))
    f_seed = gap(seed)
    if f_seed == 0.0:
        lo = hi = seed
    elif f_seed > 0.0:
        lo, hi = seed, None
        for k in range(1, 60):
            cand = 1.0 - (1.0 - seed) * 0.5**k
            if cand >= 1.0:
                break
            if gap(cand) <= 0.0:
                hi = cand
                break
            lo = cand
        if hi is None:
            raise ConvergenceError("could not bracket J(I(r2)) = r2 from above", best=lo)
    else:
        lo, hi = None, seed
        for k in range(1, 60):
            cand = seed * 0.5**k
            if gap(cand) > 0.0:
                lo = cand
                break
            hi = cand
        if lo is None:
            lo = 0.0

    r2 = lo if lo == hi else _root(gap, lo, hi, "J(I(r2)) - r2")
    r1 = _inner_i(r2, m_b)
    h1, h2 = eval_h1_h2(r1, r2)
    res_b, res_s = abs(h1 - m_b), abs(h2 - m_s)
    out = AsymmetricThresholds(r1, r2, res_b, res_s, (float(lo), float(hi)))
    if res_b > tol or res_s > tol:
        raise ConvergenceError(f"residuals ({res_b:.3g}, {res_s:.3g}) above {tol:g}", best=out)
    return out


def iota_lhs(iota: float) -> float:
    return float(xlogy(iota, iota) + 1.0 - iota)


def solve_iota(m_s: float) -> float:
    """Root of iota ln(iota) + 1 - iota = m_s on (0, 1)."""
    if not (0.0 < m_s < 1.0):
        raise DomainError(f"m_s={m_s!r} must lie in (0, 1)")
    return _root(lambda i: iota_lhs(i) - m_s, 0.0, 1.0, "iota")


def maxmin_mechanism(exp: Expectations, force_asymmetric: bool = False):
    """The maxmin mechanism for ``exp`` together with the regime it was chosen for."""
    regime = exp.regime(force_asymmetric=force_asymmetric)
    if regime is Regime.TRIVIAL:
        return NeverTrade(), regime
    if regime is Regime.SELLER_ZERO:
        raise RegimeError("m_s = 0 is not covered by the calibrated mechanisms")
    if regime is Regime.EDGE_BUYER_ONE:
        return EdgeBuyerOne(solve_iota(exp.m_s)), regime
    if regime is Regime.SYMMETRIC:
        return RDA(solve_r_symmetric(exp)), regime
    th = solve_asymmetric_thresholds(exp)
    if abs(1.0 - th.r1 - th.r2) <= EPS_LIM:
        # on the seam the logarithmic rule degenerates to the double auction
        return RDA(th.r1), regime
    return Logarithmic(th.r1, th.r2), regime


def parse_expectations(m_b, m_s) -> Expectations:
    if m_b is None or m_s is None:
        raise ConfigurationError("both m_b and m_s are required")
    return Expectations(float(m_b), float(m_s))
