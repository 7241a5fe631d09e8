import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hartree_system.bubble import (Bubble, BubblePair, KernelBasisElement, bubble_dlambda, bubble_eval,
                                   bubble_gradient, bubble_laplacian, convolution_with_potential,
                                   kernel_basis_eval, kernel_basis_neg_laplacian, kernel_mode,
                                   linearized_apply, pde_residual, riesz_convolution_bubble)
from hartree_system.params_special import DomainError, SystemParams


def _fd_neg_laplacian(f, x, h=1e-3):
    N = x.shape[-1]
    out = -2 * N * f(x)
    for i in range(N):
        e = np.zeros(N)
        e[i] = h
        out = out + f(x + e) + f(x - e)
    return -out / (h * h)


def test_bubble_peak_and_scaling(p5):
    b = Bubble(p5, scale=4.0)
    assert bubble_eval(b, np.zeros(5)) == pytest.approx(b.peak)
    assert b.peak == pytest.approx(p5.constants.C_N_alpha * 4.0 ** 1.5)
    with pytest.raises(DomainError):
        Bubble(p5, np.zeros(3))
    with pytest.raises(DomainError):
        Bubble(p5, scale=0.0)


def test_pair_synchronisation(p5):
    u = Bubble(p5)
    assert BubblePair(u).v is u
    with pytest.raises(DomainError):
        BubblePair(u, Bubble(p5, scale=2.0))


def test_gradient_and_laplacian_vs_finite_differences(p5, rng):
    b = Bubble(p5, rng.standard_normal(5) * 0.3, 1.7)
    x = rng.standard_normal((6, 5))
    h = 1e-6
    for i in range(5):
        e = np.zeros(5)
        e[i] = h
        fd = (bubble_eval(b, x + e) - bubble_eval(b, x - e)) / (2 * h)
        assert bubble_gradient(b, x)[:, i] == pytest.approx(fd, rel=1e-6, abs=1e-9)
    assert bubble_laplacian(b, x) == pytest.approx(_fd_neg_laplacian(lambda y: bubble_eval(b, y), x), rel=1e-5)


def test_dlambda_vs_finite_difference(p5, rng):
    x = rng.standard_normal((5, 5))
    lam, h = 2.0, 1e-6
    fd = (bubble_eval(Bubble(p5, scale=lam + h), x) - bubble_eval(Bubble(p5, scale=lam - h), x)) / (2 * h)
    assert bubble_dlambda(Bubble(p5, scale=lam), x) == pytest.approx(fd, rel=1e-6)


@settings(max_examples=40, deadline=None)
@given(N=st.integers(5, 9), frac=st.floats(0.05, 0.95), lam=st.floats(0.05, 20.0),
       seed=st.integers(0, 2 ** 31))
def test_pde_residual_vanishes(N, frac, lam, seed):
    a = frac * min(N - 5 + 6 / (N - 2), N)
    P = SystemParams(N, a)
    r = np.random.default_rng(seed)
    b = Bubble(P, r.standard_normal(N), lam)
    x = b.center + r.standard_normal((20, N)) * r.uniform(0.01, 30, (20, 1)) / lam
    d = pde_residual(BubblePair(b), x, details=True)
    assert np.all(np.abs(d["res_u"]) <= 1e-12 * d["scale_u"])
    assert np.all(np.abs(d["res_v"]) <= 1e-12 * d["scale_v"])


def test_pde_residual_detects_wrong_potential(p5, rng):
    x = rng.standard_normal((5, 5))
    b = Bubble(p5)
    ru, rv = pde_residual(BubblePair(b), x, K1=1.1, K2=1.0)
    # K1 enters twice: res_u = (1 - 1.1^2)(-Delta U)
    assert ru == pytest.approx((1 - 1.21) * bubble_laplacian(b, x), rel=1e-12)
    assert np.allclose(rv, 0, atol=1e-12)


def test_convolution_with_potential_control_variate(p5):
    b = Bubble(p5)
    x = np.array([[0.3, 0, 0, 0, 0]])
    # K = 2 as a callable: remainder (K - 1) V^p doubles the exact part
    val, se = convolution_with_potential(b, lambda y: np.full(len(y), 2.0), x, n_inner=50_000,
                                         rng=np.random.default_rng(0))
    ref = 2 * riesz_convolution_bubble(p5.mu, b, x)
    assert abs(val[0] - ref[0]) < 5 * se[0]
    v2, s2 = convolution_with_potential(b, 2.0, x)
    assert v2 == pytest.approx(ref) and np.all(s2 == 0)


def test_kernel_basis_roles_and_range(p5):
    assert KernelBasisElement(6, 5).role == "dilation"
    assert KernelBasisElement(2, 5).role == ("translation", 2)
    with pytest.raises(DomainError):
        KernelBasisElement(7, 5)


@pytest.mark.parametrize("idx", [1, 3, 6])
def test_kernel_basis_matches_bubble_derivatives(p5, rng, idx):
    x = rng.standard_normal((8, 5))
    e = KernelBasisElement(idx, 5)
    h = 1e-6
    if idx == 6:
        fd = (bubble_eval(Bubble(p5, scale=1 + h), x) - bubble_eval(Bubble(p5, scale=1 - h), x)) / (2 * h)
    else:
        c = np.zeros(5)
        c[idx - 1] = h
        # d/dx_j U(x) = -d/dz_j U(x - z)
        fd = (bubble_eval(Bubble(p5, -c), x) - bubble_eval(Bubble(p5, c), x)) / (2 * h)
    assert kernel_basis_eval(e, x, p5) == pytest.approx(fd, rel=1e-6, abs=1e-10)
    lap = _fd_neg_laplacian(lambda y: kernel_basis_eval(e, y, p5), x)
    assert kernel_basis_neg_laplacian(e, x, p5) == pytest.approx(lap, rel=1e-4, abs=1e-6)


@pytest.mark.parametrize("idx", [1, 6])
def test_linearized_kernel_equation(p5, idx):
    e = KernelBasisElement(idx, 5)
    psi = kernel_mode(e, p5)
    x = np.zeros((5, 5))
    x[:, 0] = [0.2, 0.7, 1.3, 4.0, 25.0]
    t1, t2 = linearized_apply("T1", psi, x, p5, terms=True)
    lhs = kernel_basis_neg_laplacian(e, x, p5)
    assert np.all(np.abs(lhs - t1 - t2) <= 1e-7 * (np.abs(t1) + np.abs(t2)))


def test_linearized_apply_rejects_unknown(p5):
    with pytest.raises(DomainError):
        linearized_apply("T3", kernel_mode(KernelBasisElement(6, 5), p5), np.zeros((1, 5)), p5)
