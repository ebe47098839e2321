"""Command-line front end.

Every command writes one report (JSON by default, CSV for dumps) and exits
with 0 on success, 2 when a verification check fails, 1 on usage or
configuration errors and 3 when a numeric routine does not converge.
"""

from __future__ import annotations

import argparse
import io
import math
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import __version__
from .calibration import maxmin_mechanism, solve_asymmetric_thresholds, solve_iota
from .core import (
    MECHANISM_NAMES,
    RDA,
    ConfigurationError,
    ConvergenceError,
    DoublePostedPrice,
    EdgeBuyerOne,
    EfficientOnSupport,
    Expectations,
    LinearDet,
    Logarithmic,
    MaxminError,
    NeverTrade,
    Regime,
    evaluate,
    mechanism_name,
)
from .distributions import (
    build_asymmetric_triangular,
    build_det_worst_case,
    build_edge_worst_case,
    build_symmetric_triangular,
    first_best_gain,
    moments,
    sample,
    total_mass,
)
from .mechanisms import simulate_spread_execution
from .simulation import info_design_sweep, monte_carlo_profit
from .verification import (
    analytic_guarantee,
    augmented_lattice,
    check_dsic,
    check_duality,
    check_epir,
    check_per_side_signs,
    check_zwvv,
    dual_certificate,
    lp_adversary,
    reconstruct_payments,
    support_extras,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_CONVERGENCE = 3

SEED_ENV = "MAXMIN_TRADE_SEED"
DEFAULT_SEED = 20240601
VERIFY_CHECKS = ("dsic", "epir", "envelope", "zwvv", "duality")


@dataclass
class RunConfig:
    command: str
    action: str | None = None
    m_b: float | None = None
    m_s: float | None = None
    mechanism: str | None = None
    r: float | None = None
    r1: float | None = None
    r2: float | None = None
    iota: float | None = None
    bid: float | None = None
    ask: float | None = None
    dist: str | None = None
    grid_n: int = 101
    sample_n: int = 100_000
    seed: int = DEFAULT_SEED
    tol: float | None = None
    method: str = "enumeration"
    r_grid: tuple = field(default_factory=lambda: tuple(np.round(np.arange(1, 10) / 10, 12)))
    output_path: str | None = None
    output_format: str = "json"
    force_asymmetric: bool = False

    def __post_init__(self):
        if self.grid_n < 2:
            raise ConfigurationError("grid must be at least 2")
        if self.sample_n < 1:
            raise ConfigurationError("n must be positive")
        if self.tol is not None and not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if self.output_format not in ("json", "csv"):
            raise ConfigurationError("format must be json or csv")

    def expectations(self) -> Expectations:
        if self.m_b is None or self.m_s is None:
            raise ConfigurationError("--mb and --ms are required")
        return Expectations(self.m_b, self.m_s)

    def echo(self) -> dict:
        out = {}
        for f in fields(self):
            val = getattr(self, f.name)
            if val is not None:
                out[f.name] = list(val) if isinstance(val, tuple) else val
        return out


# ---------------------------------------------------------------------------
# report serialisation


def _fmt(obj) -> str:
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{_fmt(str(k))}: {_fmt(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def to_json(report: dict) -> str:
    return _fmt(report) + "\n"


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(format(float(v), ".17g") for v in row) + "\n")
    return buf.getvalue()


def _check_entry(rep) -> dict:
    return rep.as_dict()


# ---------------------------------------------------------------------------
# building blocks


def build_mechanism(cfg: RunConfig):
    name = cfg.mechanism
    if name is None:
        return maxmin_mechanism(cfg.expectations(), force_asymmetric=cfg.force_asymmetric)[0]
    if name not in MECHANISM_NAMES:
        raise ConfigurationError(f"unknown mechanism {name!r}; choose from {sorted(MECHANISM_NAMES)}")
    if name == "never-trade":
        return NeverTrade()
    if name in ("rda", "efficient-on-support"):
        r = cfg.r
        if r is None:
            mech, _ = maxmin_mechanism(cfg.expectations())
            if not isinstance(mech, RDA):
                raise ConfigurationError(f"--r is required for {name} outside the symmetric regime")
            r = mech.r
        return RDA(r) if name == "rda" else EfficientOnSupport(r)
    if name == "logarithmic":
        if cfg.r1 is None or cfg.r2 is None:
            th = solve_asymmetric_thresholds(cfg.expectations())
            return Logarithmic(th.r1, th.r2)
        return Logarithmic(cfg.r1, cfg.r2)
    if name == "linear-det":
        return LinearDet(cfg.m_b, cfg.m_s) if cfg.m_b is not None else _missing("--mb/--ms")
    if name == "double-posted":
        return DoublePostedPrice(cfg.m_b, cfg.m_s) if cfg.m_b is not None else _missing("--mb/--ms")
    if name == "edge-buyer-one":
        if cfg.iota is not None:
            return EdgeBuyerOne(cfg.iota)
        if cfg.m_s is None:
            _missing("--iota or --ms")
        return EdgeBuyerOne(solve_iota(cfg.m_s))
    raise ConfigurationError(f"unknown mechanism {name!r}")


def _missing(what):
    raise ConfigurationError(f"{what} required")


def paired_distribution(mech):
    """The worst-case distribution the mechanism is certified against, if any."""
    if isinstance(mech, (RDA, EfficientOnSupport)):
        return build_symmetric_triangular(mech.r)
    if isinstance(mech, Logarithmic):
        return build_asymmetric_triangular(mech.r1, mech.r2)
    if isinstance(mech, (LinearDet, DoublePostedPrice)):
        return build_det_worst_case(mech.m_b, mech.m_s)
    if isinstance(mech, EdgeBuyerOne):
        return build_edge_worst_case(mech.iota)
    return None


def build_distribution(cfg: RunConfig):
    kind = cfg.dist
    if kind is None:
        if cfg.r is not None:
            kind = "symmetric"
        elif cfg.r1 is not None and cfg.r2 is not None:
            kind = "asymmetric"
        elif cfg.iota is not None:
            kind = "edge"
    if kind == "symmetric":
        return build_symmetric_triangular(cfg.r) if cfg.r is not None else _missing("--r")
    if kind == "asymmetric":
        return build_asymmetric_triangular(cfg.r1, cfg.r2) if cfg.r1 is not None else _missing("--r1/--r2")
    if kind == "edge":
        return build_edge_worst_case(cfg.iota if cfg.iota is not None else solve_iota(cfg.expectations().m_s))
    if kind == "det":
        e = cfg.expectations()
        return build_det_worst_case(e.m_b, e.m_s)
    if kind is not None:
        raise ConfigurationError(f"unknown distribution {kind!r}")
    dist = paired_distribution(build_mechanism(cfg))
    if dist is None:
        raise ConfigurationError("no worst-case distribution for this input")
    return dist


def _mech_params(mech) -> dict:
    return {"name": mechanism_name(mech), **{f.name: getattr(mech, f.name) for f in fields(mech)}}


# ---------------------------------------------------------------------------
# commands


def cmd_calibrate(cfg):
    exp = cfg.expectations()
    mech, regime = maxmin_mechanism(exp, force_asymmetric=cfg.force_asymmetric)
    results = {"regime": regime.value, "mechanism": _mech_params(mech)}
    if isinstance(mech, RDA):
        results["r"] = mech.r
    if regime is Regime.ASYMMETRIC:
        th = solve_asymmetric_thresholds(exp)
        results.update(
            r1=th.r1, r2=th.r2, residual_b=th.residual_b, residual_s=th.residual_s, bracket=list(th.bracket)
        )
    if isinstance(mech, EdgeBuyerOne):
        results["iota"] = mech.iota
    results["guarantee"] = analytic_guarantee(mech)
    return results, [], None


def cmd_mechanism(cfg):
    if cfg.action != "eval":
        raise ConfigurationError("usage: mechanism eval --bid B --ask A")
    if cfg.bid is None or cfg.ask is None:
        raise ConfigurationError("--bid and --ask are required")
    mech = build_mechanism(cfg)
    out = evaluate(mech, cfg.bid, cfg.ask)
    return {"mechanism": _mech_params(mech), "q": out.q, "t_b": out.t_b, "t_s": out.t_s, "t": out.t}, [], None


def cmd_distribution(cfg):
    dist = build_distribution(cfg)
    if cfg.action == "moments":
        e_b, e_s = moments(dist)
        return {"mass": total_mass(dist), "m_b": e_b, "m_s": e_s, "first_best": first_best_gain(dist)}, [], None
    if cfg.action == "sample":
        draws = sample(dist, cfg.sample_n, cfg.seed)
        csv = to_csv(["v_b", "v_s"], draws)
        results = {"n": cfg.sample_n, "mean_v_b": float(draws[:, 0].mean()), "mean_v_s": float(draws[:, 1].mean())}
        return results, [], csv
    raise ConfigurationError("usage: distribution moments|sample")


def cmd_verify(cfg):
    which = cfg.action or "all"
    if which != "all" and which not in VERIFY_CHECKS:
        raise ConfigurationError(f"unknown check {which!r}")
    mech = build_mechanism(cfg)
    dist = paired_distribution(mech)
    wanted = VERIFY_CHECKS if which == "all" else (which,)
    reports = []
    for name in wanted:
        if name == "dsic":
            reports.append(check_dsic(mech, cfg.grid_n, cfg.tol or 1e-9))
        elif name == "epir":
            reports.append(check_epir(mech, cfg.grid_n, cfg.tol or 1e-9))
        elif name == "envelope":
            reports.append(reconstruct_payments(mech, cfg.grid_n, cfg.tol or 1e-8))
        elif name == "zwvv":
            if dist is not None and dist.__class__.__name__ == "MixedDistribution" and dist.kind != "edge":
                reports.append(check_zwvv(dist, tol=cfg.tol or 1e-6))
                reports.append(check_per_side_signs(dist, tol=cfg.tol or 1e-6))
            elif which == "zwvv":
                raise ConfigurationError("zwvv needs a triangular worst-case distribution")
        elif name == "duality":
            try:
                cert = dual_certificate(mech)
            except ConfigurationError:
                if which == "duality":
                    raise
                continue
            reports.append(check_duality(mech, cert, dist, cfg.grid_n, cfg.tol or 1e-12))
    results = {"mechanism": _mech_params(mech), "passed": all(r.passed for r in reports)}
    return results, reports, None


def cmd_adversary(cfg):
    exp = cfg.expectations()
    mech = build_mechanism(cfg)
    dist = paired_distribution(mech)
    extras = support_extras(dist) if dist is not None else ()
    grid = augmented_lattice(cfg.grid_n, extras)
    worst, value = lp_adversary(mech, exp, grid, method=cfg.method)
    results = {
        "mechanism": _mech_params(mech),
        "method": cfg.method,
        "grid_points": int(len(grid)),
        "value": value,
        "support": [[p.v_b, p.v_s] for p in worst.points],
        "masses": list(worst.masses),
    }
    try:
        results["analytic_guarantee"] = analytic_guarantee(mech)
    except ConfigurationError:
        pass
    return results, [], None


def cmd_simulate(cfg):
    mech = build_mechanism(cfg)
    dist = build_distribution(cfg) if cfg.dist or cfg.mechanism is None else paired_distribution(mech)
    if dist is None:
        raise ConfigurationError("no distribution to simulate under")
    mean, stderr = monte_carlo_profit(mech, dist, cfg.sample_n, cfg.seed)
    results = {"mechanism": _mech_params(mech), "n": cfg.sample_n, "mean_profit": mean, "stderr": stderr}
    if cfg.bid is not None and cfg.ask is not None:
        runs = simulate_spread_execution(mech, cfg.bid, cfg.ask, cfg.seed, n=cfg.sample_n)
        results["spread"] = {
            "bid": cfg.bid,
            "ask": cfg.ask,
            "trade_frequency": float(np.mean(runs.traded)),
            "mean_profit": float(np.mean(runs.profit)),
        }
    return results, [], None


def cmd_infodesign(cfg):
    if cfg.action != "sweep":
        raise ConfigurationError("usage: infodesign sweep")
    rows = info_design_sweep(cfg.r_grid)
    best = max(rows, key=lambda row: row[1])
    results = {
        "rows": [[r, g] for r, g in rows],
        "argmax_r": best[0],
        "max_total_gain": best[1],
        "max_closed_form_gap": max(abs(g - 2 * r * (1 - r)) for r, g in rows),
    }
    return results, [], to_csv(["r", "total_gain"], rows)


COMMANDS = {
    "calibrate": cmd_calibrate,
    "mechanism": cmd_mechanism,
    "distribution": cmd_distribution,
    "verify": cmd_verify,
    "adversary": cmd_adversary,
    "simulate": cmd_simulate,
    "infodesign": cmd_infodesign,
}


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute one command and write its report; returns the exit code."""
    stdout = stdout or sys.stdout
    results, reports, csv = COMMANDS[cfg.command](cfg)
    report = {
        "command": cfg.command if cfg.action is None else f"{cfg.command} {cfg.action}",
        "params": cfg.echo(),
        "results": results,
        "checks": [_check_entry(r) for r in reports],
        "meta": {"version": __version__, "seed": cfg.seed},
    }
    text = csv if (cfg.output_format == "csv" and csv is not None) else to_json(report)
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return EXIT_VERIFY if any(not r.passed for r in reports) else EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


# flag dest -> (RunConfig field, type)
_OPTIONS = {
    "mb": ("m_b", float),
    "ms": ("m_s", float),
    "mechanism": ("mechanism", str),
    "r": ("r", float),
    "r1": ("r1", float),
    "r2": ("r2", float),
    "iota": ("iota", float),
    "bid": ("bid", float),
    "ask": ("ask", float),
    "dist": ("dist", str),
    "grid": ("grid_n", int),
    "n": ("sample_n", int),
    "seed": ("seed", int),
    "tol": ("tol", float),
    "method": ("method", str),
    "r_grid": ("r_grid", lambda s: tuple(float(x) for x in str(s).split(",") if x.strip())),
    "out": ("output_path", str),
    "format": ("output_format", str),
    "force_asymmetric": ("force_asymmetric", lambda s: str(s).lower() in ("1", "true", "yes")),
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="maxmin-trade", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("action", nargs="?", default=None)
    for flag in _OPTIONS:
        if flag == "force_asymmetric":
            p.add_argument("--force-asymmetric", dest=flag, action="store_const", const="true", default=None)
        else:
            p.add_argument("--" + flag.replace("_", "-"), dest=flag, default=None)
    p.add_argument("--config", default=None, help="key=value file; flags override it")
    return p


def read_config_file(path: str) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _OPTIONS:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = val
    return values


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    merged = read_config_file(ns.config) if ns.config else {}
    for key in _OPTIONS:
        val = getattr(ns, key)
        if val is not None:
            merged[key] = val
    if "seed" not in merged and os.environ.get(SEED_ENV):
        merged["seed"] = os.environ[SEED_ENV]
    kwargs = {}
    for key, val in merged.items():
        name, conv = _OPTIONS[key]
        try:
            kwargs[name] = conv(val)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key}: {val!r}") from exc
    return RunConfig(command=ns.command, action=ns.action, **kwargs)


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return run(cfg)
    except ConvergenceError as exc:
        print(f"error reason={exc.reason}: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (MaxminError, ValueError, OSError) as exc:
        reason = getattr(exc, "reason", "configuration")
        print(f"error reason={reason}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
