"""Brute-force oracle: solve the truncated chain directly.

Builds the generator from :func:`mmcsetup.model.transition_rates` state by
state (deliberately sharing no algebra with the analytic solvers), truncates
by dropping arrivals at the top level (reflecting boundary), and solves the
sparse stationary system.  Slow but trustworthy; the analytic solvers are
cross-checked against it.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .distribution import ExplicitTail, JointDistribution
from .errors import InvalidConfigError, TruncationInsufficientError
from .model import QueueParams, State, iter_states, transition_rates, validate


def choose_truncation(params: QueueParams, tol: float = 1e-12) -> int:
    """A-priori level cap: smallest k with geometric estimate
    r^k / (1 - r) < tol, doubled once for safety, floored at c + 5.

    r covers both tail regimes: the rho-geometric decay once all servers
    run, and the lambda / (lambda + c alpha) decay of the zero-active rows
    when setups are slow.  Still only an estimate; callers needing a
    guarantee should rely on the a-posteriori mass certificate in
    solve_truncated (see solve_adaptive).
    """
    validate(params)
    lam, c, alpha = params.lam, params.c, params.alpha
    r = max(params.rho, lam / (lam + c * alpha))
    k0 = max(1, math.ceil((math.log(tol) + math.log1p(-r)) / math.log(r)))
    return max(params.c + 2 * k0, params.c + 5)


def _state_index(params: QueueParams, j_max: int) -> dict[State, int]:
    # level-major order keeps the generator tightly banded (all transitions
    # move at most one level), which is what makes the sparse LU cheap
    states = sorted(iter_states(params, j_max), key=lambda s: (s.j, s.i))
    return {s: n for n, s in enumerate(states)}


def solve_truncated(
    params: QueueParams,
    j_max: int | None = None,
    tol: float = 1e-9,
) -> JointDistribution:
    """Stationary distribution of the chain truncated at level j_max.

    Raises TruncationInsufficientError if the mass sitting in the two
    boundary-distorted top levels exceeds tol, i.e. the cap was too low for
    the requested accuracy.
    """
    validate(params)
    c = params.c
    if j_max is None:
        j_max = choose_truncation(params)
    if j_max < c + 5:
        raise InvalidConfigError(f"j_max must be >= c + 5 = {c + 5}, got {j_max}")

    index = _state_index(params, j_max)
    n = len(index)
    rows, cols, vals = [], [], []
    for s, k in index.items():
        out = 0.0
        for target, rate in transition_rates(s, params):
            if target.j > j_max:
                continue  # reflecting truncation: drop arrivals at the cap
            out += rate
            rows.append(index[target])
            cols.append(k)
            vals.append(rate)
        rows.append(k)
        cols.append(k)
        vals.append(-out)
    qt = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))

    pi = _solve_stationary(qt, n)

    # package: boundary block + explicit tail levels
    boundary = np.zeros((c + 1, c))
    for j in range(c):
        for i in range(j + 1):
            boundary[i, j] = pi[index[State(i, j)]]
    tail_levels = np.zeros((j_max - c + 1, c + 1))
    for m in range(j_max - c + 1):
        for i in range(c + 1):
            tail_levels[m, i] = pi[index[State(i, c + m)]]

    # estimated truncation error: mass at levels >= j_max - 2
    tail_mass = float(tail_levels[-3:].sum())
    if tail_mass > tol:
        raise TruncationInsufficientError(
            f"mass {tail_mass:.3g} at levels >= {j_max - 2} exceeds tol {tol:.3g}; "
            f"raise j_max (currently {j_max})"
        )

    residual = float(np.abs(qt @ pi).max())
    info = {"j_max": j_max, "tail_mass": tail_mass, "balance_residual": residual}
    return JointDistribution(params, boundary, ExplicitTail(tail_levels), "oracle", info)


def solve_adaptive(
    params: QueueParams,
    tol: float = 1e-12,
    j_max: int | None = None,
    max_states: int = 2_000_000,
) -> JointDistribution:
    """solve_truncated with the cap doubled until the mass certificate passes.

    The a-priori estimate in choose_truncation assumes a rho-geometric tail,
    which slow setups violate; this wrapper keeps doubling j_max until the
    reported truncation error actually meets tol.
    """
    validate(params)
    if j_max is None:
        j_max = choose_truncation(params, tol)
    while True:
        try:
            return solve_truncated(params, j_max=j_max, tol=tol)
        except TruncationInsufficientError:
            j_max *= 2
            if j_max * (params.c + 1) > max_states:
                raise


def _solve_stationary(qt: sp.csc_matrix, n: int) -> np.ndarray:
    """Solve Q^T pi = 0, sum pi = 1 by grounding one state.

    Fixing pi at state 0 and dropping its balance equation leaves a
    nonsingular M-matrix system and, unlike replacing an equation with the
    dense normalization row, preserves the banded sparsity.
    """
    pi = np.empty(n)
    pi[0] = 1.0
    pi[1:] = spsolve(qt[1:, 1:], -qt[1:, [0]].toarray().ravel())
    ok = np.all(np.isfinite(pi)) and pi.sum() > 0
    if ok:
        pi = pi / pi.sum()
        if float(np.abs(qt @ pi).max()) > 1e-13:
            ok = False
    if not ok:
        # fallback: replace one balance equation with the normalization row
        a = qt.tolil(copy=True)
        a[0, :] = np.ones(n)
        b = np.zeros(n)
        b[0] = 1.0
        pi = spsolve(a.tocsc(), b)
        pi = pi / pi.sum()
    np.clip(pi, 0.0, None, out=pi)
    return pi / pi.sum()
