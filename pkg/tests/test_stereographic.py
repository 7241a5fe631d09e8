import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hartree_system.bubble import KernelBasisElement, bubble_eval, Bubble, kernel_basis_eval
from hartree_system.params_special import SystemParams
from hartree_system.stereographic import (SingularPointError, conformal_factor, distance_identity_check,
                                          kernel_pushforward_closed_form, pullback, pushforward,
                                          sample_sphere, stereo_forward, stereo_inverse, stereo_jacobian)

finite = st.floats(-50, 50, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(x=arrays(float, (3, 5), elements=finite))
def test_round_trip_and_unit_norm(x):
    xi = stereo_forward(x)
    assert np.allclose(np.linalg.norm(xi, axis=-1), 1.0)
    assert np.allclose(stereo_inverse(xi), x, rtol=1e-9, atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(x=arrays(float, (4, 6), elements=finite), y=arrays(float, (4, 6), elements=finite))
def test_distance_identity(x, y):
    lhs, rhs = distance_identity_check(x, y)
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-12)


def test_jacobian_is_conformal_factor_power(rng):
    x = rng.standard_normal((10, 5))
    assert stereo_jacobian(x) == pytest.approx(conformal_factor(x) ** 10)


def test_south_pole_guard():
    with pytest.raises(SingularPointError):
        stereo_inverse(np.array([0, 0, 0, 0, 0, -1.0]))


def test_push_pull_inverse(rng):
    N = 5
    h = lambda x: np.exp(-np.sum(x * x, axis=-1))
    x = rng.standard_normal((7, N))
    back = pullback(lambda xi: pushforward(h, xi), x)
    assert back == pytest.approx(h(x), rel=1e-12)


@pytest.mark.parametrize("N,alpha", [(5, 1.0), (7, 2.0), (10, 0.5)])
def test_kernel_pushforward_closed_forms(N, alpha):
    P = SystemParams(N, alpha)
    xi = sample_sphere(np.random.default_rng(2), 50, N)
    xi = xi[xi[:, -1] > -0.99]
    for idx in (1, N, N + 1):
        e = KernelBasisElement(idx, N)
        got = pushforward(lambda x: kernel_basis_eval(e, x, P), xi)
        ref = kernel_pushforward_closed_form(idx, P, xi)
        assert np.max(np.abs(got - ref)) <= 1e-10


def test_bubble_pushes_to_constant(p5):
    # S_* U = 2^(-(N-2)/2) C, a constant on the sphere
    xi = sample_sphere(np.random.default_rng(0), 20, 5)
    got = pushforward(lambda x: bubble_eval(Bubble(p5), x), xi)
    assert got == pytest.approx(np.full(20, 2 ** -1.5 * p5.constants.C_N_alpha), rel=1e-12)
