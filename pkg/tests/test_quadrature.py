import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hartree_system.params_special import DomainError, funk_hecke_eigenvalue, riesz_selfconv_constant
from hartree_system.quadrature import (AccuracyError, Annulus, Ball, Box, BubbleMixture, BubbleProposal,
                                       MonteCarloSpec, QuadratureSpec, RunningStats, block_generator,
                                       funk_hecke_oracle, gauss_jacobi, gauss_legendre,
                                       gegenbauer_normalized, importance_integral, monte_carlo_integral,
                                       radial_convolution, radial_integral, riesz_convolution_mc)


def test_gauss_legendre_exact_and_readonly():
    x, w = gauss_legendre(10)
    for k in range(20):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert float(np.dot(w, x ** k)) == pytest.approx(exact, abs=1e-14)
    with pytest.raises(ValueError):
        x[0] = 0.0


@pytest.mark.parametrize("a,b", [(0.0, 0.0), (-0.5, -0.5), (-0.7, 1.5), (2.0, 0.3)])
def test_gauss_jacobi_moments(a, b):
    # int_{-1}^{1} (1-x)^a (1+x)^b x^k dx against scipy-free Beta reductions
    x, w = gauss_jacobi(12, a, b)
    mass = 2.0 ** (a + b + 1) * math.gamma(a + 1) * math.gamma(b + 1) / math.gamma(a + b + 2)
    assert w.sum() == pytest.approx(mass, rel=1e-13)
    # first moment: mass * (b - a)/(a + b + 2)
    assert float(np.dot(w, x)) == pytest.approx(mass * (b - a) / (a + b + 2), rel=1e-12, abs=1e-14)


def test_gegenbauer_normalized_endpoint():
    s = np.linspace(-1, 1, 7)
    assert gegenbauer_normalized(0, 2.0, s) == pytest.approx(np.ones(7))
    assert gegenbauer_normalized(1, 2.0, s) == pytest.approx(s)
    assert gegenbauer_normalized(5, 2.5, np.array([1.0]))[0] == pytest.approx(1.0)
    # Legendre case nu = 1/2: P_2 = (3s^2 - 1)/2
    assert gegenbauer_normalized(2, 0.5, s) == pytest.approx((3 * s * s - 1) / 2)


@pytest.mark.parametrize("N", [5, 6, 8, 10])
@pytest.mark.parametrize("k", [0, 1, 4, 10])
def test_funk_hecke_oracle_matches_closed_form(N, k):
    for t in (N - 2.0, N - 0.7):
        assert funk_hecke_oracle(N, t, k) == pytest.approx(funk_hecke_eigenvalue(N, t, k), rel=1e-10)


def test_oracle_coarse_rule_is_worse():
    fine = abs(funk_hecke_oracle(6, 4.0, 10) / funk_hecke_eigenvalue(6, 4.0, 10) - 1)
    coarse = abs(funk_hecke_oracle(6, 4.0, 10, QuadratureSpec(node_count=4)) / funk_hecke_eigenvalue(6, 4.0, 10) - 1)
    assert coarse > 1e3 * max(fine, 1e-16)


def test_quadrature_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(node_count=0)
    with pytest.raises(DomainError):
        QuadratureSpec(rule="simpson")
    with pytest.raises(DomainError):
        QuadratureSpec(a=-1.5)


def test_radial_integral_gaussian_and_bubble():
    # int_{R^5} exp(-|x|^2) = pi^(5/2)
    assert radial_integral(lambda r: np.exp(-r * r), 5, tol=1e-12) == pytest.approx(math.pi ** 2.5, rel=1e-11)
    # int_{R^N} (1+r^2)^(-N) = pi^(N/2) Gamma(N/2)/Gamma(N)
    for N in (5, 7):
        ref = math.pi ** (N / 2) * math.gamma(N / 2) / math.gamma(N)
        assert radial_integral(lambda r: (1 + r * r) ** (-N), N, tol=1e-12) == pytest.approx(ref, rel=1e-11)


def test_radial_integral_budget():
    with pytest.raises(AccuracyError) as e:
        radial_integral(lambda r: np.sin(1e4 * r) * np.exp(-r), 3, tol=1e-14, budget=200)
    assert e.value.estimate is not None


@pytest.mark.parametrize("N,alpha", [(5, 1.0), (6, 1.5), (8, 3.0)])
def test_radial_convolution_bubble_power(N, alpha):
    mu = N - alpha
    f = lambda s: (1 + s * s) ** (-(2 * N - mu) / 2)
    I = riesz_selfconv_constant(N, mu)
    for r in (0.0, 0.3, 1.0, 7.0, 100.0):
        got = radial_convolution(mu, f, r, N, tol=1e-11)
        assert got == pytest.approx(I * (1 + r * r) ** (-mu / 2), rel=1e-8)


def test_radial_convolution_domain():
    with pytest.raises(DomainError):
        radial_convolution(5.5, lambda s: s, 1.0, 5)
    with pytest.raises(DomainError):
        radial_convolution(3.0, lambda s: s, -1.0, 5)


def test_block_generator_deterministic():
    a = block_generator(7, 3).random(5)
    b = block_generator(7, 3).random(5)
    c = block_generator(7, 4).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@settings(max_examples=100, deadline=None)
@given(xs=st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=60), cut=st.integers(0, 60))
def test_running_stats_merge_matches_batch(xs, cut):
    cut = min(cut, len(xs))
    a = RunningStats.from_samples(xs[:cut]).merge(RunningStats.from_samples(xs[cut:]))
    ref = RunningStats.from_samples(xs)
    assert a.n == ref.n
    assert a.mean == pytest.approx(ref.mean, rel=1e-9, abs=1e-9)
    assert a.m2 == pytest.approx(ref.m2, rel=1e-7, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(xs=st.lists(st.floats(-10, 10), min_size=3, max_size=30))
def test_running_stats_merge_associative(xs):
    k = len(xs) // 3
    A, B, C = (RunningStats.from_samples(p) for p in (xs[:k], xs[k:2 * k], xs[2 * k:]))
    l = A.merge(B).merge(C)
    r = A.merge(B.merge(C))
    assert l.n == r.n
    assert l.mean == pytest.approx(r.mean, abs=1e-12)
    assert l.m2 == pytest.approx(r.m2, rel=1e-9, abs=1e-9)


def test_monte_carlo_ball_volume_and_stratification():
    ball = Ball((0.0,) * 5, 2.0)
    est, se = monte_carlo_integral(lambda x: np.ones(len(x)), ball, MonteCarloSpec(1000, 1))
    assert est == pytest.approx(ball.volume())
    g = lambda x: np.sum(x * x, axis=1)
    ref = (8 * math.pi ** 2 / 3) * 2.0 ** 7 / 7  # |S^4| R^7 / 7
    e1, s1 = monte_carlo_integral(g, ball, MonteCarloSpec(200_000, 2))
    e2, s2 = monte_carlo_integral(g, ball, MonteCarloSpec(200_000, 2, shells=16))
    assert abs(e1 - ref) < 4 * s1
    assert abs(e2 - ref) < 4 * s2
    assert s2 < s1


def test_annulus_and_box():
    ann = Annulus((0.0, 0.0, 0.0), 2.0, inner=1.0)
    assert ann.volume() == pytest.approx(4 / 3 * math.pi * 7)
    pts = ann.sample(np.random.default_rng(0), 1000)
    r = np.linalg.norm(pts, axis=1)
    assert r.min() >= 1.0 and r.max() <= 2.0
    box = Box((0.0, 0.0), (2.0, 3.0))
    est, _ = monte_carlo_integral(lambda x: x[:, 0], box, MonteCarloSpec(100_000, 0))
    assert est == pytest.approx(6.0, rel=2e-2)


def test_monte_carlo_same_seed_identical():
    ball = Ball((0.0,) * 3, 1.0)
    g = lambda x: np.exp(-np.sum(x * x, axis=1))
    a = monte_carlo_integral(g, ball, MonteCarloSpec(10_000, 5, block_size=1000))
    b = monte_carlo_integral(g, ball, MonteCarloSpec(10_000, 5, block_size=1000))
    assert a == b


def test_bubble_proposal_normalised():
    q = BubbleProposal(np.zeros(5), 0.5, tail=1.0)
    # the proposal's own density integrates to 1
    val = radial_integral(lambda r: np.exp(q.logpdf(np.stack([r] + [0 * r] * 4, axis=-1))), 5, tol=1e-10)
    assert val == pytest.approx(1.0, rel=1e-9)


def test_importance_integral_bubble_power():
    N = 5
    g = lambda y: (1 + np.sum(y * y, axis=-1)) ** (-N)
    ref = math.pi ** (N / 2) * math.gamma(N / 2) / math.gamma(N)
    est, se = importance_integral(g, BubbleMixture(np.zeros((1, N)), 1.0, tail=2.0), 200_000, 3)
    assert abs(est - ref) < 4 * se
    assert se / ref < 1e-2


def test_riesz_convolution_mc_unbiased():
    N, mu = 5, 4.0
    f = lambda y: (1 + np.sum(y * y, axis=-1)) ** (-(2 * N - mu) / 2)
    x = np.array([[0.0] * 5, [2.0, 0, 0, 0, 0]])
    est, se = riesz_convolution_mc(f, x, mu, np.zeros((1, N)), 1.0, 200_000, np.random.default_rng(4), tail=0.5)
    ref = riesz_selfconv_constant(N, mu) * (1 + np.sum(x * x, axis=1)) ** (-mu / 2)
    assert np.all(np.abs(est - ref) < 5 * se)
    assert np.all(se / ref < 0.02)
