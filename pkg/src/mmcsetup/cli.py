"""Command line front end.

Subcommands:

  solve      stationary solve at one parameter point, JSON out
  sweep      grid sweep to CSV (see sweeps module for the column layout)
  crossover  setup rate where the on-off cost meets the always-on cost
  simulate   discrete-event run with batch-means confidence intervals
  validate   analytic solve vs simulation, 3-half-width comparison

Queue parameters come from flags (--lambda or --rho, --mu, --alpha, --c)
or a ``key = value`` config file; flags override the file.  Any model or
solver error prints a one-line JSON object {"error": tag, "message": ...}
and exits with status 2.  `validate` exits 1 when a metric is flagged.
"""

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import ctmc, gf, qbd
from .errors import InvalidConfigError, QueueModelError
from .measures import full_report
from .model import _COST_KEYS, CostParams, QueueParams, params_to_dict, read_config
from .sim import SimConfig, simulate, validate_against
from .sweeps import (
    SweepSpec,
    crossover_finder,
    csv_text,
    run_sweep,
    solve_distribution,
    write_csv,
)

__all__ = ["main", "entry"]


def _add_model_flags(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--lambda", dest="lam", type=float, help="arrival rate")
    ap.add_argument("--rho", type=float, help="traffic intensity (alternative to --lambda)")
    ap.add_argument("--mu", type=float, help="service rate (default 1)")
    ap.add_argument("--alpha", type=float, help="setup rate")
    ap.add_argument("--c", type=int, help="number of servers")
    ap.add_argument("--ca", type=float, help="cost per active server (default 1)")
    ap.add_argument("--cs", type=float, help="cost per server in setup (default 1)")
    ap.add_argument("--ci", type=float, help="cost per idle-on server (default 0.6)")
    ap.add_argument("--csw", type=float, help="cost per off-to-on switch (default 0)")
    ap.add_argument("--config", help="key = value parameter file; flags override it")


def _build_params(args, need_alpha: bool = True) -> tuple[QueueParams, CostParams]:
    raw = read_config(args.config) if args.config else {}
    if args.lam is not None and args.rho is not None:
        raise InvalidConfigError("--lambda and --rho are mutually exclusive")

    mu = args.mu if args.mu is not None else raw.get("mu", 1.0)
    c = args.c if args.c is not None else raw.get("c")
    if c is None:
        raise InvalidConfigError("--c is required (flag or config file)")
    c = int(c)
    alpha = args.alpha if args.alpha is not None else raw.get("alpha")
    if alpha is None:
        if not need_alpha:
            alpha = 1.0  # placeholder, the caller sweeps or solves for it
        else:
            raise InvalidConfigError("--alpha is required (flag or config file)")
    # a config rho stays a rho: flags overriding c or mu rescale lambda
    if args.rho is not None:
        lam = args.rho * c * mu
    elif args.lam is not None:
        lam = args.lam
    elif "rho" in raw:
        lam = raw["rho"] * c * mu
    elif "lambda" in raw:
        lam = raw["lambda"]
    else:
        raise InvalidConfigError("one of --lambda / --rho is required (flag or config file)")
    params = QueueParams(lam=lam, mu=mu, alpha=alpha, c=c)

    cost_kwargs = {attr: raw[k] for k, attr in _COST_KEYS.items() if k in raw}
    costs = CostParams(**cost_kwargs)
    override = {}
    for flag, field in (("ca", "c_active"), ("cs", "c_setup"),
                        ("ci", "c_idle"), ("csw", "c_switch")):
        val = getattr(args, flag)
        if val is not None:
            override[field] = val
    if override:
        costs = replace(costs, **override)
    return params, costs


def _costs_dict(costs: CostParams) -> dict:
    return {
        "c_active": costs.c_active,
        "c_setup": costs.c_setup,
        "c_idle": costs.c_idle,
        "c_switch": costs.c_switch,
    }


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _solve_full(params: QueueParams, method: str):
    """Distribution plus a JSON-ready solution dump for one method."""
    if method == "gf":
        sol = gf.solve(params)
        return sol.distribution(), sol.to_dict()
    if method == "qbd":
        sol = qbd.solve(params)
        return sol.distribution(), sol.to_dict()
    if method == "ctmc":
        dist = ctmc.solve_adaptive(params)
        return dist, dist.to_dict()
    raise InvalidConfigError(f"unknown method {method!r}")


def _cmd_solve(args) -> int:
    params, costs = _build_params(args)
    method = args.method
    if method == "all":
        dists = {m: solve_distribution(params, m) for m in ("gf", "qbd", "ctmc")}
        reports = {m: full_report(d, params, costs) for m, d in dists.items()}
        report = reports["gf"]
        vals = np.array(
            [[0.0 if v == "" else float(v) for v in r.csv_row()] for r in reports.values()]
        )
        gap = float(np.max(vals.max(axis=0) - vals.min(axis=0)))
        _, solution = _solve_full(params, "gf")
        extra = {
            "methods": ["gf", "qbd", "ctmc"],
            "method_max_gap": gap,
            "e_jobs_by_method": {m: r.e_jobs for m, r in reports.items()},
        }
    else:
        dist, solution = _solve_full(params, method)
        report = full_report(dist, params, costs)
        extra = {}

    payload = {
        "params": params_to_dict(params),
        "costs": _costs_dict(costs),
        "method": method,
        "report": report.to_dict(),
        **extra,
    }
    if args.out:
        with open(args.out + ".report.json", "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        with open(args.out + ".solution.json", "w") as fh:
            json.dump(solution, fh, indent=2)
            fh.write("\n")
        print(json.dumps({"report": args.out + ".report.json",
                          "solution": args.out + ".solution.json"}))
    else:
        payload["solution"] = solution
        print(json.dumps(payload, indent=2))
    return 0


def _parse_grid(text: str) -> tuple:
    """Comma list '0.1,1,10', or 'log:lo:hi:n' / 'lin:lo:hi:n'."""
    if text.startswith(("log:", "lin:")):
        kind, pieces = text[:3], text[4:].split(":")
        if len(pieces) != 3:
            raise InvalidConfigError(f"bad grid spec {text!r}, want {kind}:lo:hi:n")
        lo, hi, n = float(pieces[0]), float(pieces[1]), int(pieces[2])
        if kind == "log":
            vals = np.logspace(np.log10(lo), np.log10(hi), n)
        else:
            vals = np.linspace(lo, hi, n)
        return tuple(float(v) for v in vals)
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise InvalidConfigError(f"bad grid {text!r}") from None


def _cmd_sweep(args) -> int:
    params, costs = _build_params(args, need_alpha=(args.var != "alpha"))
    methods = tuple(args.method.split(",")) if args.method else ("gf",)
    if methods == ("all",):
        methods = ("gf", "qbd", "ctmc")
    spec = SweepSpec(
        var=args.var,
        grid=_parse_grid(args.grid),
        params=params,
        costs=costs,
        methods=methods,
        seed=args.seed,
        sim_events=args.events,
    )
    rows = run_sweep(spec)
    if args.out:
        write_csv(spec, rows, args.out)
        n_err = sum(1 for r in rows if r["error"])
        print(json.dumps({"csv": args.out, "points": len(rows), "errors": n_err}))
    else:
        sys.stdout.write(csv_text(spec, rows))
    return 0


def _cmd_crossover(args) -> int:
    params, costs = _build_params(args, need_alpha=False)
    res = crossover_finder(params, costs, lo=args.lo, hi=args.hi, rel_tol=args.rel_tol)
    payload = {
        "params": params_to_dict(params),
        "costs": _costs_dict(costs),
        **res.to_dict(),
    }
    _emit(payload, args.out)
    return 0


def _cmd_simulate(args) -> int:
    params, _ = _build_params(args)
    cfg = SimConfig(
        params=params,
        n_events=args.events,
        warmup_fraction=args.warmup,
        seed=args.seed,
        n_batches=args.batches,
        trace_limit=args.trace_limit,
        trace_path=args.trace,
    )
    est = simulate(cfg)
    payload = {"params": params_to_dict(params), **est.to_dict()}
    _emit(payload, args.out)
    return 0


def _cmd_validate(args) -> int:
    params, costs = _build_params(args)
    dist = solve_distribution(params, args.method)
    report = full_report(dist, params, costs)
    cfg = SimConfig(
        params=params,
        n_events=args.events,
        warmup_fraction=args.warmup,
        seed=args.seed,
        n_batches=args.batches,
    )
    est = simulate(cfg)
    ver = validate_against(report, est)
    payload = {
        "params": params_to_dict(params),
        "method": args.method,
        **ver.to_dict(),
    }
    _emit(payload, args.out)
    return 0 if ver.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mmcsetup",
        description="Exact and simulated analysis of the multiserver queue "
        "with exponential server setup times (on-off policy).",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one parameter point")
    _add_model_flags(p_solve)
    p_solve.add_argument("--method", default="gf", choices=["gf", "qbd", "ctmc", "all"])
    p_solve.add_argument("--out", help="path prefix: writes <out>.report.json and <out>.solution.json")
    p_solve.set_defaults(func=_cmd_solve)

    p_sweep = sub.add_parser("sweep", help="grid sweep, CSV output")
    _add_model_flags(p_sweep)
    p_sweep.add_argument("--var", required=True, choices=["alpha", "rho", "c", "ratio"])
    p_sweep.add_argument("--grid", required=True,
                         help="comma list, or log:lo:hi:n, or lin:lo:hi:n")
    p_sweep.add_argument("--method", default="gf",
                         help="comma list of gf,qbd,ctmc,sim or 'all'")
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--events", type=int, default=200_000,
                         help="events per point when sim is among the methods")
    p_sweep.add_argument("--out", help="CSV path (stdout when omitted)")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_cross = sub.add_parser("crossover",
                             help="alpha where on-off cost equals always-on cost")
    _add_model_flags(p_cross)
    p_cross.add_argument("--lo", type=float, default=1e-4)
    p_cross.add_argument("--hi", type=float, default=1e3)
    p_cross.add_argument("--rel-tol", type=float, default=1e-6)
    p_cross.add_argument("--out")
    p_cross.set_defaults(func=_cmd_crossover)

    p_sim = sub.add_parser("simulate", help="discrete-event simulation")
    _add_model_flags(p_sim)
    p_sim.add_argument("--events", type=int, default=1_000_000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--batches", type=int, default=20)
    p_sim.add_argument("--warmup", type=float, default=0.1)
    p_sim.add_argument("--trace", help="event-trace CSV path (debugging)")
    p_sim.add_argument("--trace-limit", type=int, default=0,
                       help="max events to trace (0 disables)")
    p_sim.add_argument("--out")
    p_sim.set_defaults(func=_cmd_simulate)

    p_val = sub.add_parser("validate", help="analytic vs simulation comparison")
    _add_model_flags(p_val)
    p_val.add_argument("--method", default="gf", choices=["gf", "qbd", "ctmc"])
    p_val.add_argument("--events", type=int, default=1_000_000)
    p_val.add_argument("--seed", type=int, default=0)
    p_val.add_argument("--batches", type=int, default=20)
    p_val.add_argument("--warmup", type=float, default=0.1)
    p_val.add_argument("--out")
    p_val.set_defaults(func=_cmd_validate)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QueueModelError as exc:
        print(json.dumps({"error": exc.tag, "message": str(exc)}))
        return 2


def entry() -> None:
    sys.exit(main())
