"""Plain M/M/c quantities, used as the alpha -> infinity limit and as the
always-on (ON-IDLE) cost baseline."""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .model import CostParams, QueueParams, validate


def erlang_b(c: int, a: float) -> float:
    """Erlang-B blocking probability for offered load a = lambda/mu.

    Standard recurrence B_k = a B_{k-1} / (k + a B_{k-1}); numerically
    benign for any c, a > 0.
    """
    b = 1.0
    for k in range(1, c + 1):
        b = a * b / (k + a * b)
    return b


def erlang_c(c: int, a: float) -> float:
    """Probability of waiting (queueing probability) in M/M/c."""
    rho = a / c
    if rho >= 1.0:
        return 1.0
    b = erlang_b(c, a)
    return b / (1.0 - rho * (1.0 - b))


def mean_jobs(params: QueueParams) -> float:
    """Stationary E[number in system] for M/M/c: c rho + C(c,a) rho/(1-rho)."""
    validate(params)
    a = params.lam / params.mu
    rho = params.rho
    return a + erlang_c(params.c, a) * rho / (1.0 - rho)


def distribution(params: QueueParams, j_max: int) -> np.ndarray:
    """Marginal P(j jobs) for j = 0..j_max, computed in log space so large
    c and tiny tail probabilities don't overflow or underflow."""
    validate(params)
    c = params.c
    a = params.lam / params.mu
    rho = params.rho
    j = np.arange(j_max + 1)
    logs = np.empty(j_max + 1)
    head = j <= c
    logs[head] = j[head] * np.log(a) - gammaln(j[head] + 1.0)
    tail = ~head
    logs[tail] = c * np.log(a) - gammaln(c + 1.0) + (j[tail] - c) * np.log(rho)
    # normalizer includes the geometric remainder past j_max
    log_c_term = c * np.log(a) - gammaln(c + 1.0)
    with np.errstate(over="ignore"):
        total = np.sum(np.exp(logs))
        if j_max >= c:
            total += np.exp(log_c_term) * rho ** (j_max - c + 1) / (1.0 - rho)
        else:
            # sum of the untabulated head plus the whole geometric tail
            for k in range(j_max + 1, c):
                total += np.exp(k * np.log(a) - gammaln(k + 1.0))
            total += np.exp(log_c_term) / (1.0 - rho)
    return np.exp(logs) / total


def onidle_cost(params: QueueParams, costs: CostParams) -> float:
    """Mean power cost of keeping all c servers on: busy ones at c_active,
    idle ones at c_idle.  E[busy] = c rho by Little's law."""
    validate(params)
    e_busy = params.c * params.rho
    return costs.c_active * e_busy + costs.c_idle * (params.c - e_busy)


def mmc_baseline(params: QueueParams, costs: CostParams) -> dict:
    """Summary dict for the always-on M/M/c with the same lambda, mu, c."""
    return {
        "e_jobs": mean_jobs(params),
        "e_busy": params.c * params.rho,
        "cost_onidle": onidle_cost(params, costs),
    }
