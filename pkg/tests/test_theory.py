import itertools
import math

import numpy as np
import pytest
from scipy import stats

from glarnet import (
    Family,
    GlarModel,
    corollary_bound,
    cross_term_stat,
    empirical_tv,
    gamma_conditional,
    mixing_tv_bound,
    omega_bernoulli,
    omega_poisson,
    poisson_bound_report,
    poisson_tail_bound,
    sigma_bernoulli,
    sigma_poisson,
    simulate,
    sparsity_of,
    stationary_pi,
    theory_report,
    thm1_bounds,
    transition_kernel,
    truncated_poisson_variance,
)
from glarnet.simulate import TimeSeries
from glarnet.theory import (
    SymmetryError,
    min_gamma_eig_exhaustive,
    poisson_exact_tail,
)


def test_sigma_omega_bernoulli_values():
    assert sigma_bernoulli(0, 0, 5.0) == pytest.approx(0.25)
    assert sigma_bernoulli(1, 1, 0) == pytest.approx(1 / (3 + math.e))
    assert omega_bernoulli(0, 0, 1.0) == pytest.approx(0.25)
    assert omega_bernoulli(0, 1, 1) == pytest.approx(1 / (3 + math.e))
    # omega uses the smaller exponent, so it dominates sigma
    for nu_t, rho, a_t in [(0.5, 3, 0.2), (1, 5, 1), (0, 2, 0.7)]:
        assert omega_bernoulli(nu_t, rho, a_t) >= sigma_bernoulli(nu_t, rho, a_t)
    # monotone decreasing in each argument
    assert sigma_bernoulli(1, 1, 1) < sigma_bernoulli(0, 1, 1)
    assert sigma_bernoulli(1, 2, 1) < sigma_bernoulli(1, 1, 1)
    assert sigma_bernoulli(1, 1, 2) < sigma_bernoulli(1, 1, 1)


def test_sigma_omega_poisson_values():
    assert sigma_poisson(0, 0, -1.0, 3.0) == pytest.approx(1.0)
    assert omega_poisson(1.0, 0, 0, -1.0, 3.0) == pytest.approx(0.8)
    assert omega_poisson(1.0, 0, 1, -1.0, 1.0) == pytest.approx(0.8 * math.exp(-1))
    with pytest.raises(ValueError):
        sigma_poisson(0, 1, 0.5, 1.0)
    with pytest.raises(ValueError):
        omega_poisson(0.0, 0, 1, -1.0, 1.0)


def test_thm1_bounds():
    prof = sparsity_of(np.array([[1.0]]))
    rows, frob = thm1_bounds(1, 1, 1, 1, prof)
    assert rows[0] == pytest.approx(144.0)
    assert frob == pytest.approx(144.0)
    rows2, frob2 = thm1_bounds(1, 1, 1, 2, prof)
    assert frob2 == pytest.approx(4 * frob)
    rows0, frob0 = thm1_bounds(1, 1, 1, 0, prof)
    assert frob0 == 0.0
    # frobenius bound is the sum of row bounds when rho_m sum to s
    A = np.array([[0.5, 0.0, -0.1], [0.0, 0.0, 0.0], [0.2, 0.2, 0.2]])
    prof = sparsity_of(A)
    rows, frob = thm1_bounds(0.9, 0.3, 0.2, 0.05, prof)
    assert frob == pytest.approx(rows.sum())


def test_corollary_bound_shapes():
    v = corollary_bound(Family.BERNOULLI, M=4, T=100, s=3, rho=2)
    assert v == pytest.approx(256 * 3 * math.log(400) ** 2 / 100)
    # roughly doubles when T halves (up to the log factor), exactly linear in s
    v2 = corollary_bound(Family.BERNOULLI, M=4, T=100, s=6, rho=2)
    assert v2 == pytest.approx(2 * v)
    p1 = corollary_bound(Family.POISSON, M=4, T=1000, s=3, rho=2, a_min=-0.5, U=2, xi=0.9)
    p2 = corollary_bound(Family.POISSON, M=4, T=2000, s=3, rho=2, a_min=-0.5, U=2, xi=0.9)
    assert p1 > p2
    with pytest.raises(ValueError):
        corollary_bound(Family.BERNOULLI, M=1, T=1, s=1, rho=1)


def test_gamma_conditional_examples():
    b = GlarModel(Family.BERNOULLI, np.zeros((1, 1)), np.zeros(1))
    gamma, eig = gamma_conditional(b, [0])
    assert gamma[0, 0] == pytest.approx(0.5)   # E[X^2] = p for binary X
    assert eig == pytest.approx(0.5)
    assert eig >= omega_bernoulli(0, 0, 0)

    p = GlarModel(Family.POISSON, np.zeros((1, 1)), np.zeros(1))
    gamma, _ = gamma_conditional(p, [0])
    assert gamma[0, 0] == pytest.approx(2.0)   # Poisson(1) second moment

    # min eigenvalue at least the smallest conditional variance
    rng = np.random.default_rng(2)
    for _ in range(10):
        M = int(rng.integers(1, 5))
        model = GlarModel(Family.BERNOULLI, rng.uniform(-1, 1, (M, M)),
                          rng.uniform(-1, 1, M))
        x = rng.integers(0, 2, M).astype(float)
        _, eig = gamma_conditional(model, x)
        assert eig >= np.min(model.conditional_variance(x)) - 1e-12


def test_gamma_eigenvalue_floor_exhaustive():
    rng = np.random.default_rng(7)
    for _ in range(25):
        M = int(rng.integers(1, 7))
        A = rng.uniform(-1, 1, (M, M))
        nu = rng.uniform(-1, 1, M)
        model = GlarModel(Family.BERNOULLI, A, nu,
                          a_min=-1, a_max=1, nu_min=-1, nu_max=1)
        prof = sparsity_of(A)
        floor = omega_bernoulli(model.nu_tilde, prof.rho, model.a_tilde)
        assert min_gamma_eig_exhaustive(model) >= floor


def test_cross_term_stat():
    zeros = TimeSeries(data=np.zeros((20, 3)), seed=0)
    model = GlarModel(Family.BERNOULLI, np.zeros((3, 3)), np.zeros(3))
    assert cross_term_stat(zeros, model) == 0.0

    m = GlarModel(Family.BERNOULLI, np.zeros((4, 4)), np.zeros(4))
    ts = simulate(m, np.zeros(4), 2000, seed=5)
    stat = cross_term_stat(ts, m)
    perm = [3, 1, 0, 2]
    ts_p = TimeSeries(data=ts.data[:, perm], seed=0)
    m_p = GlarModel(Family.BERNOULLI, m.A[np.ix_(perm, perm)], m.nu[perm])
    assert cross_term_stat(ts_p, m_p) == pytest.approx(stat)


def test_truncated_poisson_variance():
    # direct-summation oracle, independent of the library implementation
    def oracle(lam, U):
        k = np.arange(U + 1)
        w = np.array([lam ** kk / math.factorial(kk) for kk in k]) * math.exp(-lam)
        w /= w.sum()
        mu = (k * w).sum()
        return ((k - mu) ** 2 * w).sum()

    assert truncated_poisson_variance(1.0, 6) == pytest.approx(oracle(1.0, 6), rel=1e-12)
    assert truncated_poisson_variance(1.0, 6) >= 0.8
    assert truncated_poisson_variance(0.01, 6) >= 0.008
    assert truncated_poisson_variance(1.0, 200) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        truncated_poisson_variance(10.0, 6)


def test_truncated_poisson_variance_floor_grid():
    for lam in (0.5, 1.0, 2.0):
        for U in (6, 8, 12, 20):
            if U < max(6.0, 1.5 * math.e * lam, lam + 5.0):
                continue
            assert truncated_poisson_variance(lam, U) >= 0.8 * lam


def test_poisson_tail_bound():
    assert poisson_tail_bound(1.0, 4.0) == pytest.approx(1 / 3)
    exact = poisson_exact_tail(1.0, 4.0)
    assert exact == pytest.approx(float(stats.poisson.sf(5, 1.0)))
    assert exact <= 1 / 3
    # decreasing in t
    vals = [poisson_tail_bound(2.0, t) for t in range(1, 10)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    # dominates the exact tail over the whole grid
    for lam in (0.5, 1.0, 2.0, 5.0):
        for t in range(1, 21):
            assert poisson_exact_tail(lam, t) <= poisson_tail_bound(lam, t)


def test_poisson_bound_report():
    C, U, xi = poisson_bound_report(1, 10, nu_max=0.0, alpha=0.999)
    assert C == pytest.approx(5.0)   # max(2e - 1, 5)
    assert U > C or U == pytest.approx(C)
    _, _, xi1 = poisson_bound_report(1, 10, 0.0, alpha=0.9)
    assert xi1 == pytest.approx(0.9)
    _, _, xi10 = poisson_bound_report(10, 10, 0.0, alpha=0.99)
    assert xi10 == pytest.approx(0.9)
    with pytest.raises(ValueError):
        poisson_bound_report(10, 10, 0.0, alpha=0.5)


def test_transition_kernel_and_pi():
    m = GlarModel(Family.BERNOULLI, np.zeros((1, 1)), np.zeros(1))
    assert np.allclose(stationary_pi(m), [0.5, 0.5])

    m2 = GlarModel(Family.BERNOULLI, np.array([[-1.0]]), np.zeros(1))
    pi = stationary_pi(m2)
    # unnormalized weights (2, 1 + e^{-1})
    w = np.array([2.0, 1 + math.exp(-1)])
    assert np.allclose(pi, w / w.sum())
    P = m2 and transition_kernel(m2)
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-12)
    assert np.max(np.abs(pi @ P - pi)) < 1e-12

    # independent linear-algebra oracle: left eigenvector of P
    rng = np.random.default_rng(11)
    B = rng.uniform(-1, 1, (3, 3))
    m3 = GlarModel(Family.BERNOULLI, 0.5 * (B + B.T), rng.uniform(-1, 1, 3))
    P = transition_kernel(m3)
    pi = stationary_pi(m3)
    K = P.shape[0]
    lhs = np.vstack([P.T - np.eye(K), np.ones((1, K))])
    rhs = np.zeros(K + 1)
    rhs[-1] = 1.0
    pi_solve, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    assert np.allclose(pi, pi_solve, atol=1e-10)


def test_detailed_balance_symmetric_models():
    rng = np.random.default_rng(13)
    for _ in range(20):
        M = int(rng.integers(1, 4))
        B = rng.uniform(-1, 1, (M, M))
        m = GlarModel(Family.BERNOULLI, 0.5 * (B + B.T), rng.uniform(-1, 1, M))
        P = transition_kernel(m)
        pi = stationary_pi(m)
        assert np.max(np.abs(pi @ P - pi)) < 1e-10
        flux = pi[:, None] * P
        assert np.max(np.abs(flux - flux.T)) < 1e-10


def test_pi_requires_symmetry():
    m = GlarModel(Family.BERNOULLI, np.array([[0.0, 1.0], [0.0, 0.0]]), np.zeros(2))
    with pytest.raises(SymmetryError):
        stationary_pi(m)


def test_mixing_bound():
    assert mixing_tv_bound(0, 3, 0.5) == 1.0
    # Bernoulli M=1, nu_max=0: rate 1 - e^{-2 log 2} = 3/4
    for t in range(5):
        assert mixing_tv_bound(t, 1, 0.0) == pytest.approx(0.75 ** t)


def test_empirical_tv_below_bound():
    rng = np.random.default_rng(17)
    for _ in range(5):
        M = int(rng.integers(1, 4))
        B = rng.uniform(-1, 1, (M, M))
        m = GlarModel(Family.BERNOULLI, 0.5 * (B + B.T), rng.uniform(-1, 1, M))
        nu_max = float(np.max(m.nu))
        for y0 in itertools.product((0.0, 1.0), repeat=M):
            for t in (0, 1, 2, 5, 10, 25, 50):
                assert (empirical_tv(m, np.array(y0), t)
                        <= mixing_tv_bound(t, M, nu_max) + 1e-12)


def test_theory_report_assembly():
    A = np.array([[-0.5, 0.0], [0.0, -0.25]])
    m = GlarModel(Family.POISSON, A, np.zeros(2), a_min=-1.0, a_max=0.0,
                  nu_min=0.0, nu_max=0.0)
    rep = theory_report(m, T=400, lam=0.005, U=3.0)
    assert rep.frob_bound == pytest.approx(
        144.0 / (rep.params.xi * rep.params.sigma * rep.params.omega) ** 2
        * 2 * 0.005 ** 2)
    assert rep.params.xi == pytest.approx(0.9)
    # the proof's own U is enormous, which drives sigma to underflow and the
    # ceilings to infinity; that must be reported, not crash
    rep_auto = theory_report(m, T=400, lam=0.005)
    assert math.isinf(rep_auto.frob_bound)
    d = rep.to_dict()
    assert set(d) >= {"U", "sigma", "omega", "xi", "lambda_used", "frob_bound"}

    mb = GlarModel(Family.BERNOULLI, A, np.zeros(2))
    rb = theory_report(mb, T=400, lam=0.005)
    assert rb.params.xi == 1.0 and rb.params.U == 1.0
