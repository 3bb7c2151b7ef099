import math

import numpy as np
import pytest

from conftest import gf_solution, oracle_distribution
from mmcsetup import gf, mmc
from mmcsetup.errors import DegeneratePolesError
from mmcsetup.model import QueueParams

P112 = QueueParams(lam=1.0, mu=1.0, alpha=1.0, c=2)
SQRT5 = math.sqrt(5.0)


def test_pochhammer():
    assert gf.pochhammer(5.0, 0) == 1.0
    assert gf.pochhammer(2, 3) == 24.0
    assert gf.pochhammer(0, 2) == 0.0
    assert gf.pochhammer(1, 4) == 24.0  # plain factorial


def test_root_closed_forms():
    r = gf.characteristic_roots(P112)
    assert r.z[1] == pytest.approx((3.0 - SQRT5) / 2.0, abs=1e-14)
    assert r.zhat[1] == pytest.approx((3.0 + SQRT5) / 2.0, abs=1e-14)
    assert r.zhat[0] == pytest.approx(3.0, abs=1e-14)  # (lambda + c alpha)/lambda
    assert r.zhat[2] == pytest.approx(2.0, abs=1e-14)  # c mu / lambda
    assert r.z[0] == 0.0
    assert r.z[2] == 1.0


def test_root_product_identity():
    # z_i zhat_i = i mu / lambda for every phase
    p = QueueParams(lam=1.7, mu=0.9, alpha=0.23, c=7)
    r = gf.characteristic_roots(p)
    for i in range(8):
        assert r.z[i] * r.zhat[i] == pytest.approx(i * p.mu / p.lam, rel=1e-13)


def test_root_residuals():
    p = QueueParams(lam=6.0, mu=1.0, alpha=0.1, c=20)
    r = gf.characteristic_roots(p)
    lam, mu, alpha, c = 6.0, 1.0, 0.1, 20
    for i in range(21):
        s = lam + i * mu + (c - i) * alpha
        for root in (np.longdouble(r.z[i]), np.longdouble(r.zhat[i])):
            res = abs(s * root - lam * root * root - i * mu)
            assert res < 1e-12


def test_root_ordering_and_brackets():
    p = QueueParams(lam=2.6, mu=1.0, alpha=0.4, c=4)
    r = gf.characteristic_roots(p)
    assert np.all(r.z[:-1] >= 0) and np.all(r.z <= 1.0)
    assert np.all(r.zhat > 1.0)


def test_degenerate_poles_raise():
    # alpha = mu (1 - rho) collapses every outer root onto 1/rho
    p = QueueParams(lam=1.0, mu=1.0, alpha=0.5, c=2)
    with pytest.raises(DegeneratePolesError):
        gf.characteristic_roots(p)
    with pytest.raises(DegeneratePolesError):
        gf.solve(p)
    # the raw root evaluation itself stays usable (QBD needs it there)
    r = gf.quadratic_roots(p)
    assert np.all(np.isfinite(r.zhat))
    assert r.zhat[0] == pytest.approx(2.0, rel=1e-12)
    assert r.zhat[2] == pytest.approx(2.0, rel=1e-12)


def test_row_zero_ratios():
    sol3 = gf_solution(QueueParams(lam=1.0, mu=1.0, alpha=1.0, c=3))
    b = sol3.boundary
    assert b[0, 1] / b[0, 0] == pytest.approx(0.5, rel=1e-12)
    assert b[0, 2] / b[0, 0] == pytest.approx(1.0 / 6.0, rel=1e-12)

    sol2 = gf_solution(P112)
    d2 = sol2.distribution()
    # past the boundary the row-0 ratio is lambda/(lambda + c alpha) = 1/3
    assert d2.prob(0, 2) / d2.prob(0, 0) == pytest.approx(0.5 / 3.0, rel=1e-12)


def test_boundary_contraction_coefficients():
    # the backward-recursion multipliers satisfy 0 < b_j < lambda/mu,
    # replayed here from the public roots
    for p in (
        QueueParams(lam=1.0, mu=1.0, alpha=1.0, c=5),
        QueueParams(lam=4.5, mu=1.0, alpha=0.05, c=5),
        QueueParams(lam=0.9, mu=2.0, alpha=3.0, c=4),
    ):
        r = gf.characteristic_roots(p)
        lam, mu, alpha, c = p.lam, p.mu, p.alpha, p.c
        for i in range(1, c):
            b = np.zeros(c + 1)
            b[c] = 1.0 / r.zhat[i]
            for j in range(c - 1, i, -1):
                d = lam + i * mu + (j - i) * alpha - i * mu * b[j + 1]
                b[j] = lam / d
            assert np.all(b[i + 1 : c + 1] > 0)
            assert np.all(b[i + 1 : c + 1] < lam / mu + 1e-15)


def test_b_coefficient_closed_value():
    # c=2, row i=1: the single multiplier is 1/zhat_1 = lambda z_1 / mu here
    r = gf.characteristic_roots(P112)
    assert 1.0 / r.zhat[1] == pytest.approx((3.0 - SQRT5) / 2.0, abs=1e-14)


def test_boundary_row_matches_oracle_relative():
    p = QueueParams(lam=1.0, mu=1.0, alpha=0.5, c=5)
    d = gf_solution(p).distribution()
    o = oracle_distribution(p)
    for j in range(2, 40):
        ref = o.prob(2, j)
        assert d.prob(2, j) == pytest.approx(ref, rel=1e-10)


def test_cut_balance_row_zero():
    # setup flow out of row 0 balances service flow into it: for c=1,
    # mu pi_{1,1} = alpha sum_{j>=1} pi_{0,j} = lambda pi_{0,0}
    p = QueueParams(lam=0.5, mu=1.0, alpha=0.8, c=1)
    d = gf_solution(p).distribution()
    lhs = p.mu * d.prob(1, 1)
    assert lhs == pytest.approx(p.lam * d.prob(0, 0), rel=1e-12)
    row0 = sum(d.prob(0, j) for j in range(1, 200)) + d.tail.row_tail(0, 200)
    assert p.alpha * row0 == pytest.approx(lhs, rel=1e-10)


def test_level_one_balance_vs_oracle():
    d = gf_solution(P112).distribution()
    o = oracle_distribution(P112)
    assert d.prob(1, 1) / d.prob(0, 0) == pytest.approx(
        o.prob(1, 1) / o.prob(0, 0), abs=1e-10
    )
    # lambda pi_00 = mu pi_11 flow balance makes the ratio exactly 1 here
    assert d.prob(1, 1) / d.prob(0, 0) == pytest.approx(1.0, abs=1e-12)


def test_tail_coefficient_structure():
    sol = gf_solution(P112)
    # the mixture has genuinely signed coefficients
    assert (sol.A < 0).any()
    # yet every tail level is a positive probability vector
    d = sol.distribution()
    for m in range(50):
        lvl = d.tail.level(m)
        assert np.all(lvl > 0)


def test_tail_matches_oracle():
    d = gf_solution(P112).distribution()
    o = oracle_distribution(P112)
    for j in range(2, 31):
        assert d.prob(1, j) == pytest.approx(o.prob(1, j), abs=1e-10)


def test_joint_pmf_total_variation_vs_oracle():
    d = gf_solution(P112).distribution()
    o = oracle_distribution(P112)
    tv = 0.5 * sum(
        abs(d.prob(i, j) - o.prob(i, j))
        for j in range(61)
        for i in range(min(j, 2) + 1)
    )
    assert tv < 1e-10


def test_normalization():
    for p in (P112, QueueParams(lam=9.0, mu=1.0, alpha=0.2, c=10)):
        sol = gf_solution(p)
        assert sol.moments_full[:, 0].sum() == pytest.approx(1.0, abs=1e-12)
        assert sol.distribution().total_mass() == pytest.approx(1.0, abs=1e-12)


def test_mean_jobs_frozen_reference():
    # truncated-chain oracle value, solved at tol 1e-13
    assert gf_solution(P112).mean_jobs() == pytest.approx(
        2.0913719988157773, abs=1e-9
    )


def test_first_moment_row1_frozen_reference():
    # oracle: sum_j (j-1) pi_{1,j} at (1,1,1,2)
    sol = gf_solution(P112)
    assert sol.moments_full[1, 1] == pytest.approx(0.3198019958552246, rel=1e-8)


def test_moments_match_oracle_sums():
    # full factorial moments against direct oracle sums of (j-i)(j-i-1)...
    def falling(x, n):
        out = 1.0
        for t in range(n):
            out *= x - t
        return out

    for p in (P112, QueueParams(lam=2.1, mu=1.0, alpha=0.7, c=3)):
        sol = gf_solution(p)
        o = oracle_distribution(p)
        j_hi = o.info["j_max"]
        for i in range(p.c + 1):
            for n in (1, 2):
                direct = sum(
                    o.prob(i, j) * falling(j - i, n) for j in range(i, j_hi + 1)
                )
                assert sol.moments_full[i, n] == pytest.approx(direct, rel=1e-8)


def test_zeroth_moments_are_phase_marginals():
    p = QueueParams(lam=3.5, mu=1.0, alpha=0.35, c=5)
    sol = gf_solution(p)
    marg = sol.distribution().phase_marginals()
    assert np.max(np.abs(sol.moments_full[:, 0] - marg)) < 1e-12


def test_setup_free_limit_matches_erlang():
    p = QueueParams(lam=2.5, mu=1.0, alpha=1e6, c=5)
    d = gf_solution(p).distribution()
    got = d.job_marginal(200)
    want = mmc.distribution(p, 200)
    assert 0.5 * np.abs(got - want).sum() < 1e-4


def test_adaptive_precision_reports_certificate():
    p = QueueParams(lam=18.0, mu=1.0, alpha=0.01, c=20)
    sol = gf_solution(p)
    assert sol.info["pi_cc_certificate_gap"] < 1e-9
    assert sol.distribution().total_mass() == pytest.approx(1.0, abs=1e-10)
