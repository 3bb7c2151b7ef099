import numpy as np
import pytest

from conftest import oracle_distribution
from mmcsetup import ctmc, gf, mmc
from mmcsetup.errors import InvalidConfigError, TruncationInsufficientError
from mmcsetup.model import QueueParams, State, n_setup, transition_rates


def test_choose_truncation_moderate_load():
    # rho = 0.5 must leave at least 40 levels of headroom past c
    p = QueueParams(lam=1.0, mu=1.0, alpha=1.0, c=2)
    assert ctmc.choose_truncation(p, tol=1e-12) >= 2 + 40


def test_choose_truncation_heavy_load():
    p5 = QueueParams(lam=1.0, mu=1.0, alpha=1.0, c=2)
    p9 = QueueParams(lam=1.8, mu=1.0, alpha=1.0, c=2)
    j9 = ctmc.choose_truncation(p9, tol=1e-12)
    assert j9 >= 2 + 263  # geometric estimate at rho = 0.9
    assert j9 > 3 * ctmc.choose_truncation(p5, tol=1e-12)


def test_choose_truncation_floor():
    p = QueueParams(lam=2e-6, mu=1.0, alpha=1.0, c=2)
    assert 2 + 5 <= ctmc.choose_truncation(p) <= 2 + 8


def test_marginal_matches_gf_small_system():
    # single server at rho = 0.5 (the closed form exists independently)
    p = QueueParams(lam=0.5, mu=1.0, alpha=1.0, c=1)
    d = ctmc.solve_truncated(p, j_max=400, tol=1e-9)
    g = gf.solve(p).distribution()
    assert d.prob(0, 0) == pytest.approx(g.prob(0, 0), abs=1e-10)


def test_doubling_truncation_is_converged():
    p = QueueParams(lam=1.0, mu=1.0, alpha=1.0, c=2)
    d1 = ctmc.solve_truncated(p, j_max=120, tol=1e-9)
    d2 = ctmc.solve_truncated(p, j_max=240, tol=1e-9)
    worst = max(
        abs(d1.prob(i, j) - d2.prob(i, j)) for j in range(60) for i in range(min(j, 2) + 1)
    )
    assert worst < 1e-12


def test_balance_residual_certificate():
    p = QueueParams(lam=1.0, mu=1.0, alpha=1.0, c=2)
    d = ctmc.solve_truncated(p, j_max=150)
    assert d.info["balance_residual"] < 1e-12


def test_balance_equations_hold():
    # global balance at interior states, rebuilt from transition_rates
    p = QueueParams(lam=1.4, mu=1.0, alpha=0.7, c=3)
    d = oracle_distribution(p)
    for j in range(0, 25):
        for i in range(min(j, 3) + 1):
            s = State(i, j)
            out_rate = sum(r for _, r in transition_rates(s, p)) * d.prob(i, j)
            in_rate = 0.0
            for jj in range(max(0, j - 1), j + 2):
                for ii in range(min(jj, 3) + 1):
                    if (ii, jj) == (i, j):
                        continue
                    for target, rate in transition_rates(State(ii, jj), p):
                        if target == s:
                            in_rate += rate * d.prob(ii, jj)
            assert in_rate == pytest.approx(out_rate, rel=1e-11, abs=1e-16)


def test_marginals_sum_to_one():
    p = QueueParams(lam=4.5, mu=1.0, alpha=0.1, c=5)
    d = oracle_distribution(p)
    assert d.phase_marginals().sum() == pytest.approx(1.0, abs=1e-12)
    assert d.total_mass() == pytest.approx(1.0, abs=1e-12)


def test_truncation_insufficient_raises():
    # slow setups at heavy load need far more levels than the cap given
    p = QueueParams(lam=1.8, mu=1.0, alpha=0.01, c=2)
    with pytest.raises(TruncationInsufficientError):
        ctmc.solve_truncated(p, j_max=30, tol=1e-9)


def test_adaptive_recovers_from_low_guess():
    p = QueueParams(lam=1.8, mu=1.0, alpha=0.01, c=2)
    d = ctmc.solve_adaptive(p, tol=1e-10, j_max=16)
    assert d.info["tail_mass"] < 1e-10
    assert d.total_mass() == pytest.approx(1.0, abs=1e-10)


def test_jmax_must_clear_boundary():
    p = QueueParams(lam=1.0, mu=1.0, alpha=1.0, c=2)
    with pytest.raises(InvalidConfigError):
        ctmc.solve_truncated(p, j_max=4)


def test_setup_count_invariant_in_states():
    p = QueueParams(lam=1.0, mu=1.0, alpha=1.0, c=3)
    d = oracle_distribution(p)
    # any state the oracle assigns mass to satisfies the setup-count rule
    for j in range(0, 10):
        for i in range(min(j, 3) + 1):
            assert 0 <= n_setup(State(i, j), p) <= 3 - i
            assert d.prob(i, j) >= 0
