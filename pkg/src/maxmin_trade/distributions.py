"""Worst-case value distributions: construction, integration and sampling.

A ``MixedDistribution`` is an interior density on the open support plus two
edge densities (on v_B = 1 and on v_S = 0) and point atoms.  Both triangular
families share one parametrisation in (r1, r2); the symmetric one is
r2 = 1 - r1, for which the support boundary is the line v_B - v_S = r.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .core import (
    ConfigurationError,
    QuadratureError,
    ValueProfile,
)
from .mechanisms import deterministic_thresholds

QUAD_TOL = 1e-8
_EPSABS = 1e-13
_EPSREL = 1e-12
_LIMIT = 200


def _zero(x):
    return np.zeros(np.shape(x))


@dataclass(frozen=True)
class MixedDistribution:
    kind: str
    params: tuple
    interior_density: Callable
    edge_b1_density: Callable
    edge_s0_density: Callable
    atoms: tuple
    support_test: Callable
    # integration geometry: seller values in (0, seller_max) carry interior
    # mass with buyer values in (buyer_lower(v_s), 1)
    seller_max: float = 0.0
    buyer_lower: Callable = field(default=_zero, repr=False)
    seller_upper: Callable = field(default=_zero, repr=False)
    edge_b1_range: tuple = (0.0, 0.0)
    edge_s0_range: tuple = (0.0, 0.0)

    def atom_mass(self, v_b: float, v_s: float) -> float:
        return sum(m for p, m in self.atoms if p.v_b == v_b and p.v_s == v_s)


@dataclass(frozen=True)
class DiscreteDistribution:
    points: tuple
    masses: tuple

    def __post_init__(self):
        pts = tuple(p if isinstance(p, ValueProfile) else ValueProfile(*p) for p in self.points)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        if len(self.points) != len(self.masses) or not self.points:
            raise ConfigurationError("points and masses must be non-empty and of equal length")
        if any(m < 0.0 for m in self.masses) or abs(sum(self.masses) - 1.0) > 1e-9:
            raise ConfigurationError("masses must be non-negative and sum to 1")

    @property
    def v_b(self):
        return np.array([p.v_b for p in self.points])

    @property
    def v_s(self):
        return np.array([p.v_s for p in self.points])

    @property
    def weights(self):
        return np.array(self.masses)


# ---------------------------------------------------------------------------
# constructors


def _triangular(kind, r1, r2, support_test):
    c = r1 * (1.0 - r2)
    delta = (1.0 - r1) - r2
    k = delta / r2

    def interior(v_b, v_s):
        v_b = np.asarray(v_b, dtype=float)
        v_s = np.asarray(v_s, dtype=float)
        inside = support_test(v_b, v_s) & (v_b < 1.0) & (v_s > 0.0)
        gap = np.where(inside, v_b - v_s, 1.0)
        return np.where(inside, 2.0 * c / gap**3, 0.0)

    def edge_b1(v_s):
        v_s = np.asarray(v_s, dtype=float)
        on = (v_s > 0.0) & (v_s < r2)
        return np.where(on, c / np.where(on, 1.0 - v_s, 1.0) ** 2, 0.0)

    def edge_s0(v_b):
        v_b = np.asarray(v_b, dtype=float)
        on = (v_b > r1) & (v_b < 1.0)
        return np.where(on, c / np.where(on, v_b, 1.0) ** 2, 0.0)

    return MixedDistribution(
        kind=kind,
        params=(r1, r2),
        interior_density=interior,
        edge_b1_density=edge_b1,
        edge_s0_density=edge_s0,
        atoms=((ValueProfile(1.0, 0.0), c),),
        support_test=support_test,
        seller_max=r2,
        buyer_lower=lambda v_s: r1 + (1.0 - r1) * np.asarray(v_s) / r2 if k else r1 + np.asarray(v_s),
        seller_upper=lambda v_b: r2 * (np.asarray(v_b) - r1) / (1.0 - r1),
        edge_b1_range=(0.0, r2),
        edge_s0_range=(r1, 1.0),
    )


def build_symmetric_triangular(r: float) -> MixedDistribution:
    if not 0.0 < r < 1.0:
        raise ConfigurationError(f"r={r!r} must lie in (0, 1)")
    return _triangular(
        "symmetric", r, 1.0 - r, lambda v_b, v_s: np.asarray(v_b) - np.asarray(v_s) >= r
    )


def build_asymmetric_triangular(r1: float, r2: float) -> MixedDistribution:
    if not (0.0 < r1 < 1.0 and 0.0 < r2 < 1.0) or r1 + r2 == 1.0:
        raise ConfigurationError(f"need r1, r2 in (0,1) with r1 + r2 != 1, got ({r1}, {r2})")
    return _triangular(
        "asymmetric",
        r1,
        r2,
        lambda v_b, v_s: r2 * np.asarray(v_b) - (1.0 - r1) * np.asarray(v_s) >= r1 * r2,
    )


def build_det_worst_case(m_b: float, m_s: float) -> DiscreteDistribution:
    sb, ss = deterministic_thresholds(m_b, m_s)
    return DiscreteDistribution(
        points=((1.0 - sb, 0.0), (1.0, ss), (1.0, 0.0)),
        masses=(sb, ss, 1.0 - sb - ss),
    )


def build_edge_worst_case(iota: float) -> MixedDistribution:
    """Buyer value fixed at 1; seller density iota/(1-v)^2 on (0, 1-iota), atom iota at 0."""
    if not 0.0 < iota < 1.0:
        raise ConfigurationError(f"iota={iota!r} must lie in (0, 1)")
    hi = 1.0 - iota

    def edge_b1(v_s):
        v_s = np.asarray(v_s, dtype=float)
        on = (v_s > 0.0) & (v_s < hi)
        return np.where(on, iota / np.where(on, 1.0 - v_s, 1.0) ** 2, 0.0)

    return MixedDistribution(
        kind="edge",
        params=(iota,),
        interior_density=lambda v_b, v_s: np.zeros(np.broadcast(v_b, v_s).shape),
        edge_b1_density=edge_b1,
        edge_s0_density=_zero,
        atoms=((ValueProfile(1.0, 0.0), iota),),
        support_test=lambda v_b, v_s: (np.asarray(v_b) == 1.0) & (np.asarray(v_s) <= hi),
        edge_b1_range=(0.0, hi),
    )


def triangular_params(dist: MixedDistribution) -> tuple[float, float]:
    if dist.kind not in ("symmetric", "asymmetric"):
        raise ConfigurationError(f"{dist.kind} distribution is not triangular")
    return dist.params


# ---------------------------------------------------------------------------
# closed-form marginals and conditionals of the triangular family


def seller_marginal_density(dist: MixedDistribution, v_s):
    """Continuous part of the seller marginal on (0, r2); Pr_S(0) = 1 - r2 separately."""
    r1, r2 = triangular_params(dist)
    v_s = np.asarray(v_s, dtype=float)
    k = ((1.0 - r1) - r2) / r2
    on = (v_s > 0.0) & (v_s < r2)
    return np.where(on, r1 * (1.0 - r2) / (k * v_s + r1) ** 2, 0.0)


def buyer_marginal_density(dist: MixedDistribution, v_b):
    """Continuous part of the buyer marginal on (r1, 1); Pr_B(1) = r1 separately."""
    r1, r2 = triangular_params(dist)
    v_b = np.asarray(v_b, dtype=float)
    h = (((1.0 - r1) - r2) * v_b + r1 * r2) / (1.0 - r1)
    on = (v_b > r1) & (v_b < 1.0)
    return np.where(on, r1 * (1.0 - r2) / np.where(on, h, 1.0) ** 2, 0.0)


def buyer_conditional_cdf(dist: MixedDistribution, v_b, v_s: float):
    """Pr(V_B <= v_b | V_S = v_s) for 0 <= v_s < r2."""
    r1, r2 = triangular_params(dist)
    v_b = np.asarray(v_b, dtype=float)
    if not 0.0 <= v_s < r2:
        raise ConfigurationError(f"v_s={v_s} has no conditional mass")
    if v_s == 0.0:
        lo = r1
        cont = 1.0 - r1 / np.where(v_b > 0.0, v_b, 1.0)
    else:
        g = ((1.0 - r1) - r2) / r2 * v_s + r1
        lo = v_s + g
        cont = 1.0 - g**2 / np.where(v_b > v_s, v_b - v_s, 1.0) ** 2
    return np.where(v_b >= 1.0, 1.0, np.where(v_b < lo, 0.0, cont))


def seller_conditional_cdf(dist: MixedDistribution, v_s, v_b: float):
    """Pr(V_S <= v_s | V_B = v_b) for r1 < v_b <= 1."""
    r1, r2 = triangular_params(dist)
    v_s = np.asarray(v_s, dtype=float)
    if not r1 < v_b <= 1.0:
        raise ConfigurationError(f"v_b={v_b} has no conditional mass")
    if v_b == 1.0:
        return np.where(v_s >= r2, 1.0, (1.0 - r2) / (1.0 - np.minimum(v_s, r2)))
    h = (((1.0 - r1) - r2) * v_b + r1 * r2) / (1.0 - r1)
    hi = v_b - h
    cont = h**2 / (v_b - np.minimum(v_s, hi)) ** 2
    return np.where(v_s < 0.0, 0.0, np.where(v_s >= hi, 1.0, cont))


# ---------------------------------------------------------------------------
# integration


def _q(f, lo, hi):
    val, err = quad(f, lo, hi, epsabs=_EPSABS, epsrel=_EPSREL, limit=_LIMIT)
    return val, err


def expectation(dist, f, tol: float = QUAD_TOL, return_error: bool = False):
    """E[f(v_b, v_s)] under ``dist``; ``f`` is called with scalars or arrays.

    For mixed distributions the interior is integrated as an iterated
    adaptive quadrature aligned with the support boundary.  A combined error
    estimate above ``tol`` raises ``QuadratureError`` carrying the result.
    """
    if isinstance(dist, DiscreteDistribution):
        vals = np.asarray(f(dist.v_b, dist.v_s), dtype=float) * np.ones(len(dist.points))
        total = float(np.dot(dist.weights, vals))
        return (total, 0.0) if return_error else total
    if not isinstance(dist, MixedDistribution):
        raise ConfigurationError(f"unsupported distribution {dist!r}")

    err_total = 0.0
    total = 0.0
    if dist.seller_max > 0.0:
        inner_err = [0.0]

        def inner(v_s):
            lo = float(dist.buyer_lower(v_s))
            if lo >= 1.0:
                return 0.0
            val, err = _q(lambda v_b: float(f(v_b, v_s)) * float(dist.interior_density(v_b, v_s)), lo, 1.0)
            inner_err[0] = max(inner_err[0], err)
            return val

        val, err = _q(inner, 0.0, dist.seller_max)
        total += val
        err_total += err + inner_err[0] * dist.seller_max

    lo, hi = dist.edge_b1_range
    if hi > lo:
        val, err = _q(lambda v_s: float(f(1.0, v_s)) * float(dist.edge_b1_density(v_s)), lo, hi)
        total += val
        err_total += err
    lo, hi = dist.edge_s0_range
    if hi > lo:
        val, err = _q(lambda v_b: float(f(v_b, 0.0)) * float(dist.edge_s0_density(v_b)), lo, hi)
        total += val
        err_total += err
    for p, m in dist.atoms:
        total += m * float(f(p.v_b, p.v_s))

    if err_total > tol:
        raise QuadratureError(f"quadrature error estimate {err_total:.3g} above {tol:g}", best=total)
    return (total, err_total) if return_error else total


def total_mass(dist) -> float:
    return expectation(dist, lambda v_b, v_s: 1.0)


def moments(dist) -> tuple[float, float]:
    return (
        expectation(dist, lambda v_b, v_s: v_b),
        expectation(dist, lambda v_b, v_s: v_s),
    )


def first_best_gain(dist) -> float:
    return expectation(dist, lambda v_b, v_s: np.maximum(np.asarray(v_b) - np.asarray(v_s), 0.0))


# ---------------------------------------------------------------------------
# sampling


def sample_seller(dist: MixedDistribution, u):
    """Inverse seller CDF: atom at 0 with mass 1 - r2, closed-form continuous part."""
    r1, r2 = triangular_params(dist)
    u = np.asarray(u, dtype=float)
    c = r1 * (1.0 - r2)
    k = ((1.0 - r1) - r2) / r2
    w = u - (1.0 - r2)
    cont = w * r1 * r1 / (c - k * w * r1)
    return np.where(w <= 0.0, 0.0, np.minimum(cont, r2))


def sample_buyer_given_seller(dist: MixedDistribution, v_s, u):
    """Inverse of Pr(V_B <= . | V_S = v_s), sending the top mass to the atom at 1."""
    r1, r2 = triangular_params(dist)
    v_s = np.asarray(v_s, dtype=float)
    u = np.asarray(u, dtype=float)
    k = ((1.0 - r1) - r2) / r2
    # on the edge v_S = 0 the conditional CDF is 1 - r1/v_b, elsewhere 1 - g^2/(v_b - v_s)^2
    zero = v_s == 0.0
    scale = np.where(zero, r1, k * v_s + r1)
    cont = np.where(zero, r1 / (1.0 - u), v_s + scale / np.sqrt(1.0 - u))
    gap1 = np.where(zero, 1.0, 1.0 - v_s)
    atom_prob = np.where(zero, r1, (scale / np.where(gap1 > 0, gap1, 1.0)) ** 2)
    return np.where(u >= 1.0 - atom_prob, 1.0, np.minimum(cont, 1.0))


def sample(dist, n: int, rng_seed=None) -> np.ndarray:
    """``n`` i.i.d. profiles as an ``(n, 2)`` array of (v_b, v_s)."""
    n = int(n)
    if n < 1:
        raise ConfigurationError("n must be positive")
    rng = np.random.default_rng(rng_seed)
    if isinstance(dist, DiscreteDistribution):
        idx = rng.choice(len(dist.points), size=n, p=dist.weights / dist.weights.sum())
        return np.column_stack([dist.v_b[idx], dist.v_s[idx]])
    if not isinstance(dist, MixedDistribution):
        raise ConfigurationError(f"unsupported distribution {dist!r}")
    u = rng.random((n, 2))
    if dist.kind == "edge":
        (iota,) = dist.params
        u1 = u[:, 0]
        v_s = np.where(u1 < iota, 0.0, 1.0 - iota / np.where(u1 > 0, u1, 1.0))
        return np.column_stack([np.ones(n), v_s])
    if dist.kind not in ("symmetric", "asymmetric"):
        raise ConfigurationError(f"cannot sample {dist.kind} distribution")
    v_s = sample_seller(dist, u[:, 0])
    v_b = sample_buyer_given_seller(dist, v_s, u[:, 1])
    return np.column_stack([v_b, v_s])

