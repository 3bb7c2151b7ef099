"""Parameter sweeps over alpha, rho, c, or the setup/active cost ratio.

Each grid point is solved independently and emitted as one CSV row with the
full performance report plus always-on baseline columns, so the output feeds
plotting scripts and golden-file diffs directly.  Per-point solver failures
land in an ``error`` column and the sweep keeps going.  Output is
deterministic: fixed column order, points in grid order, floats via repr.
"""

from dataclasses import dataclass, replace
import csv
import io

import numpy as np

from . import ctmc, gf, mmc, qbd
from .errors import (
    DegeneratePolesError,
    InvalidConfigError,
    NoCrossingError,
    QueueModelError,
)
from .measures import PerformanceReport, full_report, performance
from .model import CostParams, QueueParams, validate
from .sim import SimConfig, simulate

__all__ = [
    "SweepSpec",
    "CrossoverResult",
    "run_sweep",
    "write_csv",
    "csv_text",
    "crossover_finder",
    "solve_distribution",
]

SWEPT_VARS = ("alpha", "rho", "c", "ratio")
ANALYTIC_METHODS = ("gf", "qbd", "ctmc")
METHODS = ANALYTIC_METHODS + ("sim",)

# gf and qbd agreeing worse than this gets the row flagged
METHOD_GAP_LIMIT = 1e-9


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: vary `var` over `grid`, hold everything else fixed.

    var "rho" and "c" rescale lambda so the traffic intensity stays the
    meaningful knob; "ratio" sweeps c_setup / c_active with the queue fixed.
    """

    var: str
    grid: tuple
    params: QueueParams
    costs: CostParams = CostParams()
    methods: tuple = ("gf",)
    seed: int = 0
    sim_events: int = 200_000


def _point(spec: SweepSpec, x) -> tuple[QueueParams, CostParams]:
    p = spec.params
    if spec.var == "alpha":
        return replace(p, alpha=float(x)), spec.costs
    if spec.var == "rho":
        return replace(p, lam=float(x) * p.c * p.mu), spec.costs
    if spec.var == "c":
        c = int(x)
        return replace(p, c=c, lam=p.rho * c * p.mu), spec.costs
    return p, replace(spec.costs, c_setup=float(x) * spec.costs.c_active)


def validate_spec(spec: SweepSpec) -> None:
    if spec.var not in SWEPT_VARS:
        raise InvalidConfigError(f"unknown sweep variable {spec.var!r}")
    if len(spec.grid) == 0:
        raise InvalidConfigError("empty sweep grid")
    g = np.asarray(spec.grid, dtype=float)
    if not np.all(np.diff(g) > 0):
        raise InvalidConfigError("sweep grid must be strictly increasing")
    if spec.var == "c" and any(int(x) != x or x < 1 for x in g):
        raise InvalidConfigError("c grid must be positive integers")
    if spec.var == "ratio" and g[0] < 0:
        raise InvalidConfigError("cost ratio must be nonnegative")
    bad = [m for m in spec.methods if m not in METHODS]
    if bad or not spec.methods:
        raise InvalidConfigError(f"methods must be a nonempty subset of {METHODS}")
    for x in spec.grid:
        p, _ = _point(spec, x)
        validate(p)  # rejects unstable grid points up front


def solve_distribution(params: QueueParams, method: str):
    """Joint stationary distribution by the requested method."""
    if method == "gf":
        return gf.solve(params).distribution()
    if method == "qbd":
        return qbd.solve(params, with_g=False).distribution()
    if method == "ctmc":
        return ctmc.solve_adaptive(params)
    raise InvalidConfigError(f"unknown method {method!r}")


_PARAM_COLS = ["index", "var", "value", "lambda", "mu", "alpha", "c", "rho"]
_BASE_COLS = ["onidle_e_jobs", "onidle_e_busy", "method_gap", "error"]
_SIM_COLS = ["sim_e_jobs", "sim_hw_jobs"]


def sweep_columns(spec: SweepSpec) -> list[str]:
    cols = _PARAM_COLS + ["method"] + PerformanceReport.csv_header() + _BASE_COLS
    if "sim" in spec.methods:
        cols += _SIM_COLS
    return cols


def _report_gap(reports: list[PerformanceReport]) -> float:
    if len(reports) < 2:
        return 0.0
    rows = [[0.0 if v == "" else float(v) for v in r.csv_row()] for r in reports]
    arr = np.asarray(rows)
    return float(np.max(arr.max(axis=0) - arr.min(axis=0)))


def run_sweep(spec: SweepSpec, out_path: str | None = None) -> list[dict]:
    """Evaluate every grid point; optionally write the CSV as well.

    Returns the rows as dicts keyed by `sweep_columns(spec)`.
    """
    validate_spec(spec)
    analytic = [m for m in spec.methods if m != "sim"]
    rows = []
    for idx, x in enumerate(spec.grid):
        p, costs = _point(spec, x)
        row = {
            "index": idx,
            "var": spec.var,
            "value": x,
            "lambda": p.lam,
            "mu": p.mu,
            "alpha": p.alpha,
            "c": p.c,
            "rho": p.rho,
            "method": analytic[0] if analytic else "sim",
            "error": "",
        }
        try:
            reports = [
                full_report(solve_distribution(p, m), p, costs) for m in analytic
            ]
            gap = _report_gap(reports)
            if reports:
                rep = reports[0]
                for name in PerformanceReport.csv_header():
                    row[name] = getattr(rep, name)
            row["method_gap"] = gap
            if gap > METHOD_GAP_LIMIT:
                row["error"] = "MethodDisagreement"
            base = mmc.mmc_baseline(p, costs)
            row["onidle_e_jobs"] = base["e_jobs"]
            row["onidle_e_busy"] = base["e_busy"]
            if "sim" in spec.methods:
                est = simulate(
                    SimConfig(params=p, n_events=spec.sim_events, seed=spec.seed)
                )
                row["sim_e_jobs"] = est.e_jobs
                row["sim_hw_jobs"] = est.hw_jobs
        except QueueModelError as exc:
            row["error"] = exc.tag
        rows.append(row)
    if out_path is not None:
        write_csv(spec, rows, out_path)
    return rows


def write_csv(spec: SweepSpec, rows: list[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        _emit_csv(spec, rows, fh)


def csv_text(spec: SweepSpec, rows: list[dict]) -> str:
    buf = io.StringIO()
    _emit_csv(spec, rows, buf)
    return buf.getvalue()


def _emit_csv(spec: SweepSpec, rows: list[dict], fh) -> None:
    cols = sweep_columns(spec)
    fh.write(f"# sweep var={spec.var} methods={','.join(spec.methods)}\n")
    fh.write(
        "# fixed: lambda={} mu={} alpha={} c={} | costs: active={} setup={} "
        "idle={} switch={} | seed={}\n".format(
            spec.params.lam,
            spec.params.mu,
            spec.params.alpha,
            spec.params.c,
            spec.costs.c_active,
            spec.costs.c_setup,
            spec.costs.c_idle,
            spec.costs.c_switch,
            spec.seed,
        )
    )
    fh.write("# columns: " + " ".join(cols) + "\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow([_cell(row.get(col, "")) for col in cols])


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v))  # plain float repr even for numpy scalars
    return str(v)


@dataclass(frozen=True)
class CrossoverResult:
    alpha_cross: float
    gap_at_root: float
    cost_onidle: float
    iterations: int
    lo: float
    hi: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def crossover_finder(
    params: QueueParams,
    costs: CostParams = CostParams(),
    lo: float = 1e-4,
    hi: float = 1e3,
    rel_tol: float = 1e-6,
    method: str = "gf",
) -> CrossoverResult:
    """Bisect for the setup rate where on-off cost meets the always-on cost.

    The on-off power cost is nonincreasing in alpha, so the sign change is
    unique when it exists; same sign at both ends raises NoCrossing.
    method "qbd" avoids extended-precision work at larger c.
    """
    validate(params)
    baseline = mmc.onidle_cost(params, costs)

    def gap(a: float) -> float:
        p = replace(params, alpha=a)
        try:
            dist = solve_distribution(p, method)
        except DegeneratePolesError:
            # bisection can land on a confluent-root alpha; the matrix
            # recursions do not care
            dist = solve_distribution(p, "qbd")
        rep = performance(dist, p)
        return costs.c_active * rep.e_active + costs.c_setup * rep.e_setup - baseline

    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo == 0.0:
        return CrossoverResult(lo, 0.0, baseline, 0, lo, hi)
    if g_hi == 0.0:
        return CrossoverResult(hi, 0.0, baseline, 0, lo, hi)
    if (g_lo > 0) == (g_hi > 0):
        raise NoCrossingError(
            f"cost gap has the same sign at alpha={lo:g} ({g_lo:.3g}) "
            f"and alpha={hi:g} ({g_hi:.3g})"
        )
    a, b = lo, hi
    it = 0
    while b - a > rel_tol * 0.5 * (a + b):
        it += 1
        mid = 0.5 * (a + b)
        g_mid = gap(mid)
        if g_mid == 0.0:
            a = b = mid
            break
        if (g_mid > 0) == (g_lo > 0):
            a = mid
        else:
            b = mid
    root = 0.5 * (a + b)
    return CrossoverResult(root, gap(root), baseline, it, lo, hi)
