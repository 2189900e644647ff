"""Command-line front end.

Subcommands
-----------
``explosion``
    Exact critical time, all six scheme bounds with case labels and
    auxiliary rates, and the feasible-eta intervals at the requested
    horizon.
``sweep``
    Critical time and scheme bounds along a parameter axis
    (omega/rho/k/xi), one CSV row per grid point.
``moment``
    Monte Carlo moment estimates against maturity with standard errors
    and overflow diagnostics.
``verify``
    Randomized property suites (riccati / eta / lemma31 / bounds) with a
    machine-readable summary and nonzero exit on failure.

Every output starts with a header block echoing the tool version and the
fully resolved, value-relevant configuration; re-running with those values
reproduces the file byte for byte.  Execution knobs (``--threads``,
``--out``) are deliberately excluded from the echo.  Reals are printed
with 17 significant digits so parsing and re-emitting round-trips exactly;
infinities are serialized as the literal ``inf``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .core import CirParams, FunctionalCoeffs
from .explosion import (
    EtaFamily,
    eta_feasible,
    exact_explosion_time,
    scheme_explosion_bound,
)
from .heston import HestonParams, estimate_heston_moment, moment_coeffs
from .montecarlo import McConfig, estimate_exp_functional
from .schemes import GridSpec, SchemeKind
from .verify import MASTER_SEED, run_suite

__all__ = ["main", "build_parser", "format_table", "load_table"]

_DEFAULTS = {
    "k": 0.4,
    "theta": 0.12,
    "xi": 0.3,
    "y0": 0.12,
    "lambda": None,
    "mu": None,
    "heston": False,
    "omega": 2.0,
    "rho": 0.5,
    "S0": 1.0,
    "r": 0.0,
    "scheme": "fte",
    "T": 1.0,
    "steps": None,
    "dt": None,
    "paths": 100_000,
    "seed": 1234,
    "format": None,
    "estimator": "conditional",
    "t_grid": None,
    "axis": None,
    "from": None,
    "to": None,
    "points": 101,
    "suite": None,
}

_SCHEME_ORDER = ("pte", "fte", "abs", "ref", "sym", "bem")


def _fmt(x) -> str:
    """Lossless text form: 17 significant digits, literal inf/nan."""
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _parse_real(text: str) -> float:
    return float(text)


def _sanitize(obj):
    """JSON-safe copy: non-finite floats become their literal strings."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    x = float(obj)
    if math.isinf(x) or math.isnan(x):
        return _fmt(x)
    return x


def format_table(config: dict, columns: list[str], rows: list[list]) -> str:
    """CSV text with the provenance header block."""
    lines = [
        f"# cirmoments {__version__}",
        "# config " + json.dumps(_sanitize(config), sort_keys=True, separators=(",", ":")),
        ",".join(columns),
    ]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def load_table(text: str):
    """Parse CSV text produced by :func:`format_table`.

    Returns ``(config, columns, rows)`` with every cell parsed back to a
    float (the literal ``inf`` round-trips).
    """
    config = {}
    columns = None
    rows = []
    for line in text.splitlines():
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("config "):
                config = json.loads(body[len("config "):])
            continue
        if columns is None:
            columns = line.split(",")
            continue
        rows.append([_parse_real(cell) for cell in line.split(",")])
    return config, columns, rows


def _write(text: str, out: str | None):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(payload: dict, out: str | None):
    _write(json.dumps(_sanitize(payload), indent=2, sort_keys=True) + "\n", out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--k", type=float, help="mean-reversion rate")
    g.add_argument("--theta", type=float, help="long-run level")
    g.add_argument("--xi", type=float, help="volatility of volatility")
    g.add_argument("--y0", type=float, help="initial variance")
    g.add_argument("--lambda", dest="lambda_", type=float, help="time-integral exponent coefficient")
    g.add_argument("--mu", type=float, help="stochastic-integral exponent coefficient")
    g.add_argument("--heston", action="store_true", default=None,
                   help="derive (lambda, mu) from a Heston moment of order omega")
    g.add_argument("--omega", type=float, help="moment order (with --heston)")
    g.add_argument("--rho", type=float, help="price/variance correlation (with --heston)")
    g.add_argument("--S0", type=float, help="initial price")
    g.add_argument("--r", type=float, help="risk-free rate")
    rg = common.add_argument_group("run")
    rg.add_argument("--scheme", choices=_SCHEME_ORDER, help="discretization scheme")
    rg.add_argument("--T", type=float, help="horizon")
    rg.add_argument("--steps", type=int, help="number of grid steps")
    rg.add_argument("--dt", type=float, help="grid step size (alternative to --steps)")
    rg.add_argument("--paths", type=int, help="Monte Carlo paths")
    rg.add_argument("--seed", type=int, help="master seed")
    rg.add_argument("--threads", type=int, default=1,
                    help="worker threads (never changes any output value)")
    rg.add_argument("--config", help="JSON file with the same keys; flags override it")
    rg.add_argument("--out", help="output file (default stdout)")
    rg.add_argument("--format", choices=("csv", "json"), help="output format")

    parser = argparse.ArgumentParser(
        prog="cirmoments",
        description="Moment-explosion times and bounds for Euler schemes of the square-root diffusion",
    )
    parser.add_argument("--version", action="version", version=f"cirmoments {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("explosion", parents=[common],
                   help="critical times, scheme bounds, and eta intervals")

    sw = sub.add_parser("sweep", parents=[common],
                        help="critical times along a parameter axis")
    sw.add_argument("--axis", choices=("omega", "rho", "k", "xi"), required=True)
    sw.add_argument("--from", dest="from_", type=float, required=True)
    sw.add_argument("--to", type=float, required=True)
    sw.add_argument("--points", type=int)

    mo = sub.add_parser("moment", parents=[common],
                        help="Monte Carlo moment estimates against maturity")
    mo.add_argument("--t-grid", dest="t_grid",
                    help="comma-separated maturities (default: just T)")
    mo.add_argument("--estimator", choices=("conditional", "joint"),
                    help="Heston estimator variant")

    ve = sub.add_parser("verify", parents=[common],
                        help="run a randomized property suite")
    ve.add_argument("--suite", choices=("riccati", "eta", "lemma31", "bounds"), required=True)

    return parser


_ARG_TO_KEY = {
    "k": "k", "theta": "theta", "xi": "xi", "y0": "y0",
    "lambda_": "lambda", "mu": "mu", "heston": "heston",
    "omega": "omega", "rho": "rho", "S0": "S0", "r": "r",
    "scheme": "scheme", "T": "T", "steps": "steps", "dt": "dt",
    "paths": "paths", "seed": "seed", "format": "format",
    "estimator": "estimator", "t_grid": "t_grid",
    "axis": "axis", "from_": "from", "to": "to", "points": "points",
    "suite": "suite",
}


def _resolve_config(args) -> dict:
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(_DEFAULTS) - {"threads", "out"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        loaded.pop("threads", None)
        loaded.pop("out", None)
        cfg.update(loaded)
    for arg, key in _ARG_TO_KEY.items():
        value = getattr(args, arg, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _cir_params(cfg: dict) -> CirParams:
    return CirParams(kappa=cfg["k"], theta=cfg["theta"], xi=cfg["xi"], y0=cfg["y0"])


def _functional(cfg: dict) -> FunctionalCoeffs:
    if cfg["heston"]:
        return moment_coeffs(cfg["omega"], cfg["rho"])
    if cfg["lambda"] is None or cfg["mu"] is None:
        raise ValueError("provide --lambda and --mu, or use --heston with --omega/--rho")
    return FunctionalCoeffs(lam=cfg["lambda"], mu=cfg["mu"])


def _grid(cfg: dict, horizon: float | None = None) -> GridSpec:
    T = horizon if horizon is not None else cfg["T"]
    if cfg["steps"] is not None and horizon is None:
        return GridSpec(T=T, steps=cfg["steps"])
    dt = cfg["dt"] if cfg["dt"] is not None else 0.01
    return GridSpec(T=T, steps=max(1, round(T / dt)))


def _echo_keys(cfg: dict, keys: tuple[str, ...]) -> dict:
    return {k: cfg[k] for k in keys}


def _explosion_payload(cfg: dict) -> dict:
    p = _cir_params(cfg)
    f = _functional(cfg)
    exact = exact_explosion_time(p, f)
    bounds = {
        name: scheme_explosion_bound(SchemeKind(name), p, f) for name in _SCHEME_ORDER
    }
    payload = {
        "tool": "cirmoments",
        "version": __version__,
        "config": _echo_keys(cfg, ("k", "theta", "xi", "y0", "lambda", "mu",
                                   "heston", "omega", "rho", "T")),
        "delta": f.delta,
        "exact": {"value": exact.value, "case": exact.case, "aux": exact.aux},
        "bounds": {
            name: {"value": b.value, "case": b.case, "aux": b.aux}
            for name, b in bounds.items()
        },
    }
    if f.delta > 0.0:
        intervals = {}
        families = {
            "bem": (EtaFamily.BEM, f),
            "trunc": (EtaFamily.TRUNC, f),
            "ref": (EtaFamily.TRUNC, FunctionalCoeffs(f.lam, abs(f.mu))),
        }
        for name, (family, f_eff) in families.items():
            iv = eta_feasible(family, p, f_eff, cfg["T"])
            intervals[name] = (
                {"empty": True} if iv.empty
                else {"empty": False, "lower": iv.lower, "upper": iv.upper}
            )
        payload["eta_intervals"] = {"T": cfg["T"], **intervals}
    return payload


def _cmd_explosion(args) -> int:
    cfg = _resolve_config(args)
    payload = _explosion_payload(cfg)
    if (cfg["format"] or "json") == "json":
        _emit_json(payload, args.out)
    else:
        rows = [["exact", payload["exact"]["value"], payload["exact"]["case"],
                 payload["exact"]["aux"] if payload["exact"]["aux"] is not None else math.nan]]
        for name in _SCHEME_ORDER:
            b = payload["bounds"][name]
            rows.append([name, b["value"], b["case"],
                         b["aux"] if b["aux"] is not None else math.nan])
        # quantity/case are strings; emit them verbatim
        lines = [
            f"# cirmoments {__version__}",
            "# config " + json.dumps(_sanitize(payload["config"]), sort_keys=True,
                                     separators=(",", ":")),
            "quantity,value,case,aux",
        ]
        for row in rows:
            lines.append(f"{row[0]},{_fmt(row[1])},{row[2]},{_fmt(row[3])}")
        _write("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    lo, hi, points = cfg["from"], cfg["to"], cfg["points"]
    if points < 2:
        raise ValueError("sweep needs at least 2 points")
    values = np.linspace(lo, hi, points)
    rows = []
    for value in values:
        local = dict(cfg)
        local[cfg["axis"]] = float(value)
        p = _cir_params(local)
        f = moment_coeffs(local["omega"], local["rho"])
        row = [float(value), exact_explosion_time(p, f).value]
        row += [scheme_explosion_bound(SchemeKind(name), p, f).value for name in _SCHEME_ORDER]
        rows.append(row)
    echo = _echo_keys(cfg, ("k", "theta", "xi", "y0", "omega", "rho",
                            "axis", "from", "to", "points"))
    text = format_table(echo, ["axis_value", "exact", *_SCHEME_ORDER], rows)
    _write(text, args.out)
    return 0


def _parse_t_grid(cfg: dict) -> list[float]:
    if cfg["t_grid"]:
        if isinstance(cfg["t_grid"], str):
            return [float(tok) for tok in cfg["t_grid"].split(",") if tok.strip()]
        return [float(t) for t in cfg["t_grid"]]
    return [cfg["T"]]


def _cmd_moment(args) -> int:
    cfg = _resolve_config(args)
    t_grid = _parse_t_grid(cfg)
    t_max = max(t_grid)
    grid = _grid(cfg, horizon=t_max)
    kind = SchemeKind(cfg["scheme"])
    mc = McConfig(paths=cfg["paths"], seed=cfg["seed"], record_grid=tuple(t_grid))
    if cfg["heston"]:
        h = HestonParams(s0=cfg["S0"], r=cfg["r"], v=_cir_params(cfg), rho=cfg["rho"])
        est = estimate_heston_moment(h, cfg["omega"], kind, grid, mc,
                                     threads=args.threads, estimator=cfg["estimator"])
    else:
        f = _functional(cfg)
        est = estimate_exp_functional(kind, _cir_params(cfg), f, grid, mc,
                                      threads=args.threads)
    rows = [
        [t, e.mean, e.stderr, e.saturated_paths, e.max_log_weight]
        for t, e in est.curve
    ]
    echo = _echo_keys(cfg, ("k", "theta", "xi", "y0", "lambda", "mu", "heston",
                            "omega", "rho", "S0", "r", "scheme", "dt", "steps",
                            "paths", "seed", "estimator", "t_grid"))
    echo["T"] = t_max
    echo["grid_steps"] = grid.steps
    columns = ["T", "estimate", "stderr", "saturated_paths", "max_log_weight"]
    if (cfg["format"] or "csv") == "json":
        payload = {
            "tool": "cirmoments",
            "version": __version__,
            "config": echo,
            "columns": columns,
            "rows": rows,
        }
        _emit_json(payload, args.out)
    else:
        _write(format_table(echo, columns, rows), args.out)
    return 0


def _cmd_verify(args) -> int:
    cfg = _resolve_config(args)
    seed = cfg["seed"] if cfg["seed"] != _DEFAULTS["seed"] else MASTER_SEED
    report = run_suite(cfg["suite"], seed=seed)
    _emit_json(report, args.out)
    return 0 if report["passed"] else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "explosion": _cmd_explosion,
        "sweep": _cmd_sweep,
        "moment": _cmd_moment,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"cirmoments: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
