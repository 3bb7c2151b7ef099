"""Event-driven simulator used as an independent statistical check.

The simulated state is (active, in-setup, jobs).  Setups follow the on-off
policy: every arrival that finds an off server starts one warming, a setup
completion activates its server (which immediately takes a waiting job),
and a departure either hands the freed server the head-of-line job (turning
one warming server off if that makes a setup redundant) or shuts the server
down when nothing is waiting.  The in-setup count therefore always equals
min(jobs - active, c - active); the simulator tracks it explicitly through
the policy deltas and verifies the identity after every event.

Statistics are time averages over batches of equal event counts, with 95%
confidence half-widths from the batch means.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.stats import t as student_t

from .errors import InternalInconsistencyError, InvalidConfigError
from .model import QueueParams, validate

__all__ = ["SimConfig", "SimEstimate", "ValidationReport", "simulate", "validate_against"]

_CHUNK = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    params: QueueParams
    n_events: int = 1_000_000
    warmup_fraction: float = 0.1
    seed: int = 0
    n_batches: int = 20
    trace_limit: int = 0
    trace_path: str | None = None


@dataclass(frozen=True)
class SimEstimate:
    e_jobs: float
    e_active: float
    e_setup: float
    switching_rate: float
    phase_marginal: np.ndarray
    hw_jobs: float
    hw_active: float
    hw_setup: float
    hw_switching: float
    hw_marginal: np.ndarray
    off_to_on_rate: float
    on_to_off_rate: float
    n_events: int
    sim_time: float
    n_batches: int
    seed: int

    def to_dict(self) -> dict:
        out = {}
        for key, val in self.__dict__.items():
            out[key] = val.tolist() if isinstance(val, np.ndarray) else val
        return out


def _check_config(cfg: SimConfig) -> int:
    validate(cfg.params)
    if cfg.n_batches < 10:
        raise InvalidConfigError(f"need at least 10 batches, got {cfg.n_batches}")
    if not 0.0 <= cfg.warmup_fraction < 1.0:
        raise InvalidConfigError(
            f"warmup fraction must be in [0, 1), got {cfg.warmup_fraction}"
        )
    n_warm = int(cfg.n_events * cfg.warmup_fraction)
    batch = (cfg.n_events - n_warm) // cfg.n_batches
    if batch < 1:
        raise InvalidConfigError(
            f"{cfg.n_events} events leave no room for {cfg.n_batches} batches "
            f"after warmup"
        )
    return n_warm


def simulate(cfg: SimConfig) -> SimEstimate:
    """Run the simulation and return batch-means estimates."""
    n_warm = _check_config(cfg)
    p = cfg.params
    lam, mu, alpha, c = p.lam, p.mu, p.alpha, p.c
    batch_size = (cfg.n_events - n_warm) // cfg.n_batches
    n_total = n_warm + batch_size * cfg.n_batches

    rng = np.random.default_rng(cfg.seed)
    buf = rng.random(_CHUNK)
    pos = 0

    trace = [] if cfg.trace_limit > 0 else None

    i = s = j = 0  # active, in setup, jobs; empty start
    # per-batch accumulators
    bt = np.zeros(cfg.n_batches)  # batch durations
    bj = np.zeros(cfg.n_batches)  # integral of jobs dt
    ba = np.zeros(cfg.n_batches)
    bs = np.zeros(cfg.n_batches)
    bphase = np.zeros((cfg.n_batches, c + 1))
    b_on = np.zeros(cfg.n_batches)  # setup completions (off -> on)
    b_off = np.zeros(cfg.n_batches)  # server shutdowns (on -> off)

    for n in range(n_total):
        if pos + 2 > _CHUNK:
            buf = rng.random(_CHUNK)
            pos = 0
        u_t, u_e = buf[pos], buf[pos + 1]
        pos += 2

        total = lam + i * mu + s * alpha
        dt = -math.log(1.0 - u_t) / total

        if n >= n_warm:
            b = (n - n_warm) // batch_size
            bt[b] += dt
            bj[b] += j * dt
            ba[b] += i * dt
            bs[b] += s * dt
            bphase[b, i] += dt

        x = u_e * total
        if x < lam:
            kind = "arrival"
            j += 1
            if i + s < c:
                s += 1
        elif x < lam + i * mu:
            j -= 1
            if j >= i:
                kind = "departure"
                # freed server takes the next job; one setup is now redundant
                if s > j - i:
                    s -= 1
            else:
                kind = "shutdown"
                i -= 1
                if n >= n_warm:
                    b_off[(n - n_warm) // batch_size] += 1
        else:
            kind = "activation"
            s -= 1
            i += 1
            if n >= n_warm:
                b_on[(n - n_warm) // batch_size] += 1

        if s != min(j - i, c - i):
            raise InternalInconsistencyError(
                f"setup count {s} != min(j-i, c-i) in state i={i} j={j}"
            )
        if trace is not None and len(trace) < cfg.trace_limit:
            trace.append((n, kind, i, s, j))

    if trace is not None and cfg.trace_path:
        with open(cfg.trace_path, "w") as fh:
            fh.write("event,kind,active,in_setup,jobs\n")
            for row in trace:
                fh.write(",".join(str(v) for v in row) + "\n")

    def batch_stats(num: np.ndarray):
        means = num / bt
        est = float(means.mean())
        hw = _halfwidth(means)
        return est, hw

    e_jobs, hw_jobs = batch_stats(bj)
    e_active, hw_active = batch_stats(ba)
    e_setup, hw_setup = batch_stats(bs)
    rate_on, hw_on = batch_stats(b_on)
    rate_off, _ = batch_stats(b_off)
    pm = bphase / bt[:, None]
    marginal = pm.mean(axis=0)
    hw_marg = np.array([_halfwidth(pm[:, k]) for k in range(c + 1)])

    return SimEstimate(
        e_jobs=e_jobs,
        e_active=e_active,
        e_setup=e_setup,
        switching_rate=rate_on,
        phase_marginal=marginal,
        hw_jobs=hw_jobs,
        hw_active=hw_active,
        hw_setup=hw_setup,
        hw_switching=hw_on,
        hw_marginal=hw_marg,
        off_to_on_rate=rate_on,
        on_to_off_rate=rate_off,
        n_events=n_total,
        sim_time=float(bt.sum()),
        n_batches=cfg.n_batches,
        seed=cfg.seed,
    )


def _halfwidth(values: np.ndarray) -> float:
    n = len(values)
    std = float(values.std(ddof=1))
    return float(student_t.ppf(0.975, n - 1)) * std / math.sqrt(n)


@dataclass(frozen=True)
class ValidationReport:
    """Per-metric 3-half-width comparison between analysis and simulation."""

    rows: list
    passed: bool

    def to_dict(self) -> dict:
        return {"passed": self.passed, "metrics": [dict(r) for r in self.rows]}


def validate_against(analytic, sim: SimEstimate, n_sigma: float = 3.0) -> ValidationReport:
    """Flag metrics where |analytic - simulated| > n_sigma half-widths.

    `analytic` is a PerformanceReport for the same parameters.
    """
    rows = []

    def add(name, ref, est, hw):
        gap = abs(ref - est)
        limit = n_sigma * hw
        rows.append(
            {
                "metric": name,
                "analytic": float(ref),
                "simulated": float(est),
                "halfwidth": float(hw),
                "ok": bool(gap <= limit),
            }
        )

    add("e_jobs", analytic.e_jobs, sim.e_jobs, sim.hw_jobs)
    add("e_active", analytic.e_active, sim.e_active, sim.hw_active)
    add("e_setup", analytic.e_setup, sim.e_setup, sim.hw_setup)
    add("switching_rate", analytic.switching_rate, sim.switching_rate, sim.hw_switching)
    for k in range(len(sim.phase_marginal)):
        add(
            f"pi_{k}",
            analytic.phase_marginal[k],
            sim.phase_marginal[k],
            sim.hw_marginal[k],
        )
    return ValidationReport(rows=rows, passed=all(r["ok"] for r in rows))
