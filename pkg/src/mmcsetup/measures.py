"""Aggregate measures, power costs, and the conditional decomposition.

Everything here consumes a JointDistribution, so the three solvers (and the
truncated-chain oracle) are interchangeable upstream.  Infinite sums over
the tail use the tail object's closed forms; a brute-force level sum is
available behind a flag for debugging.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateConditionError, InternalInconsistencyError
from .mmc import onidle_cost
from .model import CostParams, QueueParams

__all__ = [
    "PerformanceReport",
    "DecompositionReport",
    "performance",
    "switching_rate",
    "costs",
    "full_report",
    "decomposition",
]


@dataclass(frozen=True)
class PerformanceReport:
    """Steady-state server and job counts, plus optional cost figures."""

    e_active: float
    e_setup: float
    switching_rate: float
    e_jobs: float
    phase_marginal: np.ndarray
    cost_onoff: float | None = None
    cost_onidle: float | None = None
    total_cost_onoff: float | None = None

    def to_dict(self) -> dict:
        out = {
            "e_active": self.e_active,
            "e_setup": self.e_setup,
            "switching_rate": self.switching_rate,
            "e_jobs": self.e_jobs,
            "phase_marginal": [float(v) for v in self.phase_marginal],
        }
        for key in ("cost_onoff", "cost_onidle", "total_cost_onoff"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out

    @staticmethod
    def csv_header() -> list:
        return [
            "e_active",
            "e_setup",
            "switching_rate",
            "e_jobs",
            "cost_onoff",
            "cost_onidle",
            "total_cost_onoff",
        ]

    def csv_row(self) -> list:
        def fmt(v):
            return "" if v is None else repr(float(v))

        return [
            fmt(self.e_active),
            fmt(self.e_setup),
            fmt(self.switching_rate),
            fmt(self.e_jobs),
            fmt(self.cost_onoff),
            fmt(self.cost_onidle),
            fmt(self.total_cost_onoff),
        ]


def _setup_expectation(dist, params: QueueParams) -> float:
    """E[servers in setup] = sum min(j - i, c - i) pi_{i,j}.

    Past level c every row has all c - i off servers warming, so the tail
    contributes (c - i) times the row tail mass.
    """
    c = params.c
    boundary = dist.boundary
    total = 0.0
    for j in range(c):
        i = np.arange(j + 1)
        total += float(((j - i) * boundary[: j + 1, j]).sum())
    i = np.arange(c + 1)
    total += float(((c - i) * dist.tail.sum0()).sum())
    return total


def _switch_sides(dist, params: QueueParams, e_setup: float):
    """Both sides of the steady-state switching balance.

    OFF->ON completions happen at rate alpha per warming server; ON->OFF
    switches happen when a departure empties phase i, at rate i mu from the
    diagonal states.  In steady state the two rates coincide.
    """
    c = params.c
    side_alpha = params.alpha * e_setup
    diag = np.diagonal(dist.boundary)  # pi_{i,i} for i < c
    i = np.arange(len(diag))
    side_mu = float((i * params.mu * diag).sum())
    side_mu += c * params.mu * float(dist.tail.level(0)[c])
    return side_alpha, side_mu


def switching_rate(dist, params: QueueParams) -> float:
    """Rate of OFF->ON transitions, validated against the ON->OFF side."""
    side_alpha, side_mu = _switch_sides(dist, params, _setup_expectation(dist, params))
    if abs(side_alpha - side_mu) > 1e-10 * max(1.0, abs(side_mu)):
        raise InternalInconsistencyError(
            f"switching balance violated: alpha side {side_alpha!r}, "
            f"mu side {side_mu!r}"
        )
    return side_mu


def performance(dist, params: QueueParams, brute_levels: int | None = None) -> PerformanceReport:
    """Core report: E[A], E[S], E[S_r], E[L] and the phase marginal.

    brute_levels replaces the closed-form tail sums with a plain sum over
    that many levels; useful only to debug a tail representation.
    """
    marginal = dist.phase_marginals()
    e_active = float((np.arange(params.c + 1) * marginal).sum())
    if brute_levels is not None:
        e_setup = e_jobs = 0.0
        for j in range(brute_levels):
            vec = dist.level(j)
            i = np.arange(len(vec))
            e_setup += float((np.minimum(j - i, params.c - i) * vec).sum())
            e_jobs += j * float(vec.sum())
    else:
        e_setup = _setup_expectation(dist, params)
        e_jobs = dist.mean_jobs()
    side_alpha, side_mu = _switch_sides(dist, params, e_setup)
    if abs(side_alpha - side_mu) > 1e-10 * max(1.0, abs(side_mu)):
        raise InternalInconsistencyError(
            f"switching balance violated: alpha side {side_alpha!r}, "
            f"mu side {side_mu!r}"
        )
    return PerformanceReport(
        e_active=e_active,
        e_setup=e_setup,
        switching_rate=side_mu,
        e_jobs=e_jobs,
        phase_marginal=marginal,
    )


def costs(
    report: PerformanceReport, cost_params: CostParams, params: QueueParams
) -> PerformanceReport:
    """Fill the three cost fields from the displayed formulas."""
    on_off = cost_params.c_active * report.e_active + cost_params.c_setup * report.e_setup
    return replace(
        report,
        cost_onoff=on_off,
        cost_onidle=onidle_cost(params, cost_params),
        total_cost_onoff=on_off + cost_params.c_switch * report.switching_rate,
    )


def full_report(
    dist, params: QueueParams, cost_params: CostParams | None = None
) -> PerformanceReport:
    report = performance(dist, params)
    if cost_params is not None:
        report = costs(report, cost_params, params)
    return report


@dataclass(frozen=True)
class DecompositionReport:
    """Conditional queue beyond c, split into a setup-free part plus a
    residual part carried by the last warming server."""

    dist_qc: np.ndarray
    dist_onidle: np.ndarray
    dist_res: np.ndarray
    convolution: np.ndarray
    tv_gap: float
    support: int

    def to_dict(self) -> dict:
        return {
            "dist_qc": self.dist_qc.tolist(),
            "dist_onidle": self.dist_onidle.tolist(),
            "dist_res": self.dist_res.tolist(),
            "convolution": self.convolution.tolist(),
            "tv_gap": self.tv_gap,
            "support": self.support,
        }


def decomposition(dist, params: QueueParams, mass_tol: float = 1e-12) -> DecompositionReport:
    """Check dist_Qc == geometric * residual in distribution.

    The support is extended until every truncated tail holds less than
    mass_tol, which leaves the reported total-variation gap meaningful down
    to well below 1e-10.
    """
    c = params.c
    rho = params.rho
    s0, s1 = dist.tail.sum0(), dist.tail.sum1()
    qc_mass = float(s0[c])
    res_mean = float(s0[c - 1] + s1[c - 1])
    if not qc_mass > 0.0:
        raise DegenerateConditionError(
            "all-busy probability vanished; conditional queue undefined"
        )
    if not res_mean > 0.0:
        raise DegenerateConditionError(
            "phase c-1 tail has zero mean; residual distribution undefined"
        )

    support = max(64, int(np.ceil(np.log(mass_tol) / np.log(rho))) + 1)
    while True:
        if (
            rho ** (support + 1) < mass_tol
            and dist.tail.row_tail(c - 1, support + 1) / res_mean < mass_tol
            and dist.tail.row_tail(c, support + 1) / qc_mass < mass_tol
        ):
            break
        support *= 2
        if support > 10_000_000:
            raise InternalInconsistencyError(
                "decomposition support exploded; tail not decaying"
            )

    m = np.arange(support + 1)
    qc = np.array([dist.tail.level(k)[c] for k in m]) / qc_mass
    onidle = (1.0 - rho) * rho**m
    res = np.array([dist.tail.row_tail(c - 1, k) for k in m]) / res_mean
    conv = np.convolve(onidle, res)[: support + 1]

    resid_qc = dist.tail.row_tail(c, support + 1) / qc_mass
    resid_conv = max(0.0, 1.0 - float(conv.sum()))
    tv = 0.5 * (float(np.abs(qc - conv).sum()) + resid_qc + resid_conv)
    return DecompositionReport(
        dist_qc=qc,
        dist_onidle=onidle,
        dist_res=res,
        convolution=conv,
        tv_gap=tv,
        support=support,
    )
