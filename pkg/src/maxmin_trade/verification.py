"""Numeric certificates for mechanisms and worst-case distributions.

Lattice checks (incentives, participation, duality) compare closed-form
quantities and use tight tolerances; quadrature-backed checks (envelope
reconstruction, virtual values) use looser ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec

from .core import (
    RDA,
    ConfigurationError,
    DomainError,
    DoublePostedPrice,
    EdgeBuyerOne,
    Expectations,
    InfeasibilityError,
    LinearDet,
    Logarithmic,
    NeverTrade,
    evaluate,
)
from .distributions import (
    DiscreteDistribution,
    MixedDistribution,
    seller_marginal_density,
    triangular_params,
)

LATTICE_TOL = 1e-12
QUAD_CHECK_TOL = 1e-6


@dataclass(frozen=True)
class VerificationReport:
    check_name: str
    passed: bool
    worst_violation: float
    witness: tuple | None
    tolerance: float
    details: dict = field(default_factory=dict)

    @classmethod
    def from_violation(cls, name, worst, witness, tol, **details):
        worst = float(worst) + 0.0  # no negative zero in reports
        return cls(name, bool(worst <= tol), worst, witness, float(tol), details)

    def as_dict(self) -> dict:
        return {
            "name": self.check_name,
            "passed": self.passed,
            "worst_violation": self.worst_violation,
            "witness": None if self.witness is None else [float(x) for x in self.witness],
            "tolerance": self.tolerance,
        }


def merge_reports(name: str, reports) -> VerificationReport:
    """Max-violation reduction of several reports into one."""
    reports = list(reports)
    worst = max(reports, key=lambda r: r.worst_violation - r.tolerance)
    return VerificationReport(
        name,
        all(r.passed for r in reports),
        worst.worst_violation,
        worst.witness,
        worst.tolerance,
        {"parts": [r.check_name for r in reports]},
    )


def unit_grid(n: int) -> np.ndarray:
    if n < 2:
        raise ConfigurationError("grid_n must be at least 2")
    return np.linspace(0.0, 1.0, int(n))


def _outcome_grid(mech, x):
    B, A = np.meshgrid(x, x, indexing="ij")
    out = evaluate(mech, B, A)
    return np.asarray(out.q), np.asarray(out.t_b), np.asarray(out.t_s), np.asarray(out.t)


# ---------------------------------------------------------------------------
# incentives and participation


def check_dsic(mech, grid_n: int = 101, tol: float = 1e-9) -> VerificationReport:
    """Largest gain from misreporting over a grid_n^3 lattice of (value, other, report)."""
    x = unit_grid(grid_n)
    Q, TB, TS, _ = _outcome_grid(mech, x)
    worst, witness = -np.inf, None
    for j in range(len(x)):
        # buyer with value x[i] facing ask x[j], reporting x[k]
        dev = x[:, None] * Q[None, :, j] - TB[None, :, j]
        gain = dev.max(axis=1) - (x * Q[:, j] - TB[:, j])
        i = int(np.argmax(gain))
        if gain[i] > worst:
            k = int(np.argmax(dev[i]))
            worst, witness = gain[i], ("buyer", x[i], x[j], x[k])
        # seller with value x[j] facing bid x[i], reporting x[l]
        dev = x[:, None] * (1.0 - Q[j, None, :]) + TS[j, None, :]
        truth = x * (1.0 - Q[j, :]) + TS[j, :]
        gain = dev.max(axis=1) - truth
        i = int(np.argmax(gain))
        if gain[i] > worst:
            k = int(np.argmax(dev[i]))
            worst, witness = gain[i], ("seller", x[i], x[j], x[k])
    side, value, other, report = witness
    return VerificationReport.from_violation(
        "dsic", max(worst, 0.0), (value, other, report), tol, side=side
    )


def check_epir(mech, grid_n: int = 101, tol: float = 1e-9) -> VerificationReport:
    x = unit_grid(grid_n)
    Q, TB, TS, _ = _outcome_grid(mech, x)
    B, A = np.meshgrid(x, x, indexing="ij")
    short_b = -(B * Q - TB)
    short_s = -(TS - A * Q)
    short = np.maximum(short_b, short_s)
    idx = np.unravel_index(int(np.argmax(short)), short.shape)
    return VerificationReport.from_violation(
        "epir", max(float(short[idx]), 0.0), (B[idx], A[idx]), tol
    )


# ---------------------------------------------------------------------------
# envelope reconstruction


def _switch_points(pred, n_iter=64):
    """Vectorised bisection for the boundary of a monotone predicate on [0, 1].

    ``pred(x)`` must be False then True as x increases; returns arrays (lo, hi)
    bracketing the switch point.
    """
    lo, hi = pred.zeros(), pred.ones()
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        on = pred(mid)
        hi = np.where(on, mid, hi)
        lo = np.where(on, lo, mid)
    return lo, hi


class _Pred:
    def __init__(self, fn, shape):
        self.fn = fn
        self.shape = shape

    def __call__(self, x):
        return self.fn(x)

    def zeros(self):
        return np.zeros(self.shape)

    def ones(self):
        return np.ones(self.shape)


def _q_integral(qfun, lo, hi):
    """Vector of integrals of ``qfun`` over [lo_i, hi_i] by one adaptive rule."""
    length = np.maximum(hi - lo, 0.0)
    if not np.any(length > 0.0):
        return np.zeros_like(lo), 0.0

    def f(u):
        return qfun(lo + u * length) * length

    val, err = quad_vec(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=400)
    return np.asarray(val), float(err)


def reconstruct_payments(mech, grid_n: int = 101, tol: float = 1e-8) -> VerificationReport:
    """Compare closed-form payments with the envelope integrals of the trading rule."""
    x = unit_grid(grid_n)
    B, A = np.meshgrid(x, x, indexing="ij")
    b, a = B.ravel(), A.ravel()
    out = evaluate(mech, b, a)
    q = np.asarray(out.q)

    def q_of(bb, aa):
        return np.asarray(evaluate(mech, np.clip(bb, 0.0, 1.0), np.clip(aa, 0.0, 1.0)).q)

    # buyer: q(., a) is zero below a switch point and smooth above it
    _, kb = _switch_points(_Pred(lambda z: q_of(z, a) > 0.0, a.shape))
    int_b, err_b = _q_integral(lambda z: q_of(z, a), kb, np.maximum(b, kb))
    recon_b = b * q - int_b
    # seller: q(b, .) is positive below a switch point
    ks, _ = _switch_points(_Pred(lambda z: ~(q_of(b, z) > 0.0), b.shape))
    int_s, err_s = _q_integral(lambda z: q_of(b, z), a, np.maximum(a, ks))
    recon_s = a * q + int_s

    gap_b = np.abs(recon_b - np.asarray(out.t_b))
    gap_s = np.abs(recon_s - np.asarray(out.t_s))
    gap = np.maximum(gap_b, gap_s)
    i = int(np.argmax(gap))
    return VerificationReport.from_violation(
        "envelope", gap[i], (b[i], a[i]), tol, quad_error=max(err_b, err_s)
    )


# ---------------------------------------------------------------------------
# weighted virtual values


def _interior_points(v_b, v_s):
    v_b = np.atleast_1d(np.asarray(v_b, dtype=float))
    v_s = np.atleast_1d(np.asarray(v_s, dtype=float))
    v_b, v_s = np.broadcast_arrays(v_b, v_s)
    if np.any(v_b >= 1.0) or np.any(v_s <= 0.0) or np.any(v_b < 0.0) or np.any(v_s > 1.0):
        raise DomainError("virtual values are defined pointwise only off the edges v_B=1, v_S=0")
    return v_b, v_s


def buyer_partial(dist: MixedDistribution, v_b, v_s):
    """Pi_B(v_b, v_s) = integral of the interior density over x in (0, v_b) at fixed v_s."""
    r1, r2 = triangular_params(dist)
    inside = (v_s > 0.0) & (v_s < r2)
    lo = np.where(inside, dist.buyer_lower(np.where(inside, v_s, 0.0)), 1.0)
    hi = np.where(inside, np.minimum(v_b, 1.0), 1.0)
    hi = np.maximum(hi, lo)
    val, _ = _q_integral(lambda z: dist.interior_density(z, v_s), lo, hi)
    return val


def seller_partial(dist: MixedDistribution, v_s, v_b):
    """Pi_S(v_s, v_b): the v_S = 0 edge density plus the interior integral over (0, v_s)."""
    r1, r2 = triangular_params(dist)
    upper = np.where(v_b > r1, dist.seller_upper(v_b), 0.0)
    hi = np.clip(np.minimum(v_s, upper), 0.0, None)
    val, _ = _q_integral(lambda z: dist.interior_density(v_b, z), np.zeros_like(hi), hi)
    return dist.edge_s0_density(v_b) + val


def per_side_virtual_values(dist: MixedDistribution, v_b, v_s):
    """(Phi_B, Phi_S) at interior profiles; arrays in, arrays out."""
    scalar = np.ndim(v_b) == 0 and np.ndim(v_s) == 0
    v_b, v_s = _interior_points(v_b, v_s)
    dens = dist.interior_density(v_b, v_s)
    phi_b = dens * v_b - (seller_marginal_density(dist, v_s) - buyer_partial(dist, v_b, v_s))
    phi_s = dens * v_s + seller_partial(dist, v_s, v_b)
    if scalar:
        return float(phi_b[0]), float(phi_s[0])
    return phi_b, phi_s


def weighted_virtual_value(dist: MixedDistribution, v_b, v_s):
    scalar = np.ndim(v_b) == 0 and np.ndim(v_s) == 0
    phi_b, phi_s = per_side_virtual_values(dist, np.atleast_1d(v_b), np.atleast_1d(v_s))
    phi = phi_b - phi_s
    return float(phi[0]) if scalar else phi


def interior_support_points(dist: MixedDistribution, n_side: int = 100):
    """n_side^2 points strictly inside the support, aligned with its boundary."""
    r1, r2 = triangular_params(dist)
    u = (np.arange(n_side) + 0.5) / n_side
    v_s = r2 * u
    lo = dist.buyer_lower(v_s)
    V_s = np.repeat(v_s, n_side)
    V_b = np.repeat(lo, n_side) + np.tile(u, n_side) * np.repeat(1.0 - lo, n_side)
    return V_b, V_s


def off_support_points(dist: MixedDistribution, n_side: int = 100):
    u = (np.arange(n_side) + 0.5) / n_side
    V_b, V_s = (g.ravel() for g in np.meshgrid(u, u, indexing="ij"))
    keep = ~dist.support_test(V_b, V_s)
    return V_b[keep], V_s[keep]


def check_zwvv(dist: MixedDistribution, n_side: int = 100, tol: float = QUAD_CHECK_TOL) -> VerificationReport:
    v_b, v_s = interior_support_points(dist, n_side)
    phi = np.abs(weighted_virtual_value(dist, v_b, v_s))
    i = int(np.argmax(phi))
    return VerificationReport.from_violation("zwvv", phi[i], (v_b[i], v_s[i]), tol, n_points=int(v_b.size))


def check_per_side_signs(dist: MixedDistribution, n_side: int = 100, tol: float = QUAD_CHECK_TOL):
    """Phi_B = Phi_S > 0 on the support, Phi_B <= 0 <= Phi_S off it."""
    v_b, v_s = interior_support_points(dist, n_side)
    pb, ps = per_side_virtual_values(dist, v_b, v_s)
    on = np.maximum(np.abs(pb - ps), -np.minimum(pb, 0.0))
    vb_o, vs_o = off_support_points(dist, n_side)
    pb_o, ps_o = per_side_virtual_values(dist, vb_o, vs_o)
    off = np.maximum(pb_o, -ps_o)
    i, j = int(np.argmax(on)), int(np.argmax(off))
    if on[i] >= off[j]:
        worst, wit = on[i], (v_b[i], v_s[i])
    else:
        worst, wit = off[j], (vb_o[j], vs_o[j])
    return VerificationReport.from_violation(
        "per_side_signs", max(worst, 0.0), wit, tol, on_support=float(on[i]), off_support=float(off[j])
    )


# ---------------------------------------------------------------------------
# duality


@dataclass(frozen=True)
class DualCertificate:
    lambda_b: float
    lambda_s: float
    mu: float

    def objective(self, exp: Expectations) -> float:
        return self.lambda_b * exp.m_b + self.lambda_s * exp.m_s + self.mu

    def linear_form(self, v_b, v_s):
        return self.lambda_b * np.asarray(v_b) + self.lambda_s * np.asarray(v_s) + self.mu


def dual_certificate(mech) -> DualCertificate:
    mech.validate()
    if isinstance(mech, RDA):
        r = mech.r
        return DualCertificate(r / (1.0 - r), -r / (1.0 - r), -r * r / (1.0 - r))
    if isinstance(mech, Logarithmic):
        r1, r2 = mech.r1, mech.r2
        d = 1.0 - r1 - r2
        L = math.log((1.0 - r2) / r1)
        return DualCertificate(d / ((1.0 - r1) * L), -d / (r2 * L), -r1 * d / ((1.0 - r1) * L))
    if isinstance(mech, (LinearDet, DoublePostedPrice)):
        sb, ss = math.sqrt(1.0 - mech.m_b), math.sqrt(mech.m_s)
        g = 1.0 - sb - ss
        return DualCertificate(g / sb, -g / ss, -g * (1.0 - sb) / sb)
    raise ConfigurationError(f"no dual certificate for {type(mech).__name__}")


def dual_slack(mech, cert: DualCertificate, v_b, v_s):
    """t(v) - (lambda . v + mu); non-negative wherever the certificate is feasible."""
    return np.asarray(evaluate(mech, v_b, v_s).t) - cert.linear_form(v_b, v_s)


def augmented_lattice(grid_n: int, extra=()) -> np.ndarray:
    """Uniform grid_n x grid_n lattice plus ``extra`` points, duplicates removed (order kept)."""
    x = unit_grid(grid_n)
    B, A = np.meshgrid(x, x, indexing="ij")
    pts = np.column_stack([B.ravel(), A.ravel()])
    if len(extra):
        pts = np.vstack([pts, np.asarray(extra, dtype=float).reshape(-1, 2)])
    _, first = np.unique(pts, axis=0, return_index=True)
    return pts[np.sort(first)]


def support_points(dist, grid: np.ndarray) -> np.ndarray:
    if isinstance(dist, DiscreteDistribution):
        sup = np.column_stack([dist.v_b, dist.v_s])[dist.weights > 0.0]
        return np.array([(p == sup).all(axis=1).any() for p in grid], dtype=bool)
    return np.asarray(dist.support_test(grid[:, 0], grid[:, 1]), dtype=bool)


def support_extras(dist) -> np.ndarray:
    """Support vertices that a uniform lattice may miss."""
    if isinstance(dist, DiscreteDistribution):
        return np.column_stack([dist.v_b, dist.v_s])
    if dist.kind == "edge":
        (iota,) = dist.params
        return np.array([[1.0, 0.0], [1.0, 1.0 - iota]])
    r1, r2 = triangular_params(dist)
    return np.array([[1.0, 0.0], [r1, 0.0], [1.0, r2]])


def check_duality(mech, cert: DualCertificate, dist, grid_n: int = 101, tol: float = LATTICE_TOL, grid=None):
    """Feasibility of (lambda, mu) on the lattice and equality on its support points."""
    pts = augmented_lattice(grid_n, support_extras(dist)) if grid is None else np.asarray(grid, float)
    slack = dual_slack(mech, cert, pts[:, 0], pts[:, 1])
    on = support_points(dist, pts)
    infeas = np.max(-slack)
    i = int(np.argmax(-slack))
    gap = np.abs(slack[on]) if on.any() else np.zeros(1)
    j = int(np.argmax(gap))
    if infeas >= gap[j]:
        worst, wit = infeas, tuple(pts[i])
    else:
        worst, wit = gap[j], tuple(pts[on][j])
    return VerificationReport.from_violation(
        "duality",
        max(worst, 0.0),
        wit,
        tol,
        infeasibility=float(max(infeas, 0.0)),
        support_gap=float(gap[j]),
        n_support=int(on.sum()),
    )


# ---------------------------------------------------------------------------
# LP adversary


def _as_points(grid) -> np.ndarray:
    if isinstance(grid, np.ndarray):
        pts = np.asarray(grid, dtype=float).reshape(-1, 2)
    else:
        pts = np.array([[p[0], p[1]] if not hasattr(p, "v_b") else [p.v_b, p.v_s] for p in grid], dtype=float)
    if pts.shape[0] < 3:
        raise ConfigurationError("grid needs at least three points")
    return pts


def lp_adversary(mech, exp: Expectations, grid, method: str = "enumeration"):
    """Nature's best response on a finite grid: min E[t] subject to the two means.

    ``method="enumeration"`` scans every basic solution (triples of grid
    points); ``method="linprog"`` solves the same LP with HiGHS and is meant
    only as a cross-check.  Returns ``(DiscreteDistribution, value)``.
    """
    pts = _as_points(grid)
    values = np.ascontiguousarray(np.asarray(evaluate(mech, pts[:, 0], pts[:, 1]).t, dtype=float))
    target = np.array([exp.m_b, exp.m_s])

    if method == "linprog":
        return _lp_highs(pts, values, target)
    if method != "enumeration":
        raise ConfigurationError(f"unknown LP method {method!r}")

    from ._lp_kernel import enumerate_triples, orientation_table

    orient = orientation_table(pts, target)
    best, i, j, k = enumerate_triples(orient, values)
    if i < 0:
        raise InfeasibilityError(f"means {tuple(target)} are outside the convex hull of the grid")
    idx = np.array([i, j, k])
    mat = np.vstack([np.ones(3), pts[idx, 0], pts[idx, 1]])
    w = np.linalg.solve(mat, np.array([1.0, target[0], target[1]]))
    w = np.where(w < 0.0, 0.0, w)
    w = w / w.sum()
    keep = w > 0.0
    dist = DiscreteDistribution(tuple(map(tuple, pts[idx][keep])), tuple(w[keep]))
    return dist, float(np.dot(w, values[idx]))


def _lp_highs(pts, values, target):
    from scipy.optimize import linprog

    a_eq = np.vstack([np.ones(len(pts)), pts[:, 0], pts[:, 1]])
    b_eq = np.array([1.0, target[0], target[1]])
    res = linprog(values, A_eq=a_eq, b_eq=b_eq, bounds=(0.0, None), method="highs")
    if res.status == 2:
        raise InfeasibilityError("moment constraints infeasible on this grid")
    if res.status != 0:
        raise InfeasibilityError(f"linprog failed: {res.message}")
    w = np.asarray(res.x)
    keep = w > 1e-14
    w_keep = w[keep] / w[keep].sum()
    dist = DiscreteDistribution(tuple(map(tuple, pts[keep])), tuple(w_keep))
    return dist, float(res.fun)


def analytic_guarantee(mech) -> float:
    mech.validate()
    if isinstance(mech, RDA):
        return mech.r**2
    if isinstance(mech, Logarithmic):
        return mech.r1 * (1.0 - mech.r2)
    if isinstance(mech, (LinearDet, DoublePostedPrice)):
        return (1.0 - math.sqrt(mech.m_s) - math.sqrt(1.0 - mech.m_b)) ** 2
    if isinstance(mech, NeverTrade):
        return 0.0
    if isinstance(mech, EdgeBuyerOne):
        return mech.iota
    raise ConfigurationError(f"no analytic guarantee for {type(mech).__name__}")
