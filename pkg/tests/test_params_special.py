import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hartree_system.params_special import (DomainError, KernelExponent, SystemParams, admissibility_bound,
                                           bubble_amplitude, check_admissible, funk_hecke_eigenvalue,
                                           funk_hecke_eigenvalue_loggamma, gamma_fn, harmonic_dim,
                                           hls_sharp_constant, log_gamma, riesz_selfconv_constant,
                                           sphere_surface_area)

# independent 40-digit values (mpmath)
FROZEN_C = {(5, 1.0): 0.9836391782538883173, (6, 1.0): 1.2818639395647741577,
            (7, 0.5): 0.776923425393491529, (10, 0.3): 1.5100912406604268465}
FROZEN_I = {(5, 1.0): 15.503138340149910088, (6, 1.0): 16.536680896159904094,
            (7, 0.5): 45.049484744617411127, (10, 0.3): 63.119442400407198018}
FROZEN_LAMBDA = {(5, 3.0, 0): 21.055156055657298387, (5, 3.0, 1): 9.0236383095674135944,
                 (5, 3.0, 4): 2.2085828030409753553, (6, 4.0, 2): 6.2012553360599640351,
                 (6, 5.5, 3): 42.126759453539749242, (8, 6.0, 5): 2.7058080842778454788}


@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 2.5, 7.3, 20.0, 33.3, 150.0, 171.0])
def test_gamma_matches_stdlib(x):
    rel = 1e-13 if x < 50 else 5e-13
    assert gamma_fn(x) == pytest.approx(math.gamma(x), rel=rel)
    assert log_gamma(x) == pytest.approx(math.lgamma(x), rel=1e-13, abs=1e-14)


def test_gamma_small_integers_and_domain():
    assert gamma_fn(0.25) == pytest.approx(math.gamma(0.25), rel=1e-13)
    assert gamma_fn(6) == 120.0
    with pytest.raises(OverflowError):
        gamma_fn(200.0)
    with pytest.raises(DomainError):
        gamma_fn(-0.5)
    with pytest.raises(DomainError):
        log_gamma(0.0)


def test_sphere_area():
    assert sphere_surface_area(2) == pytest.approx(2 * math.pi)
    assert sphere_surface_area(3) == pytest.approx(4 * math.pi)
    with pytest.raises(DomainError):
        sphere_surface_area(0)


@pytest.mark.parametrize("key", list(FROZEN_C))
def test_amplitude_and_selfconv_frozen(key):
    N, a = key
    P = SystemParams(N, a)
    assert bubble_amplitude(P) == pytest.approx(FROZEN_C[key], rel=1e-13)
    assert riesz_selfconv_constant(N, N - a) == pytest.approx(FROZEN_I[key], rel=1e-13)


@pytest.mark.parametrize("key", list(FROZEN_LAMBDA))
def test_funk_hecke_frozen(key):
    N, t, k = key
    assert funk_hecke_eigenvalue(N, t, k) == pytest.approx(FROZEN_LAMBDA[key], rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(N=st.integers(5, 12), frac=st.floats(0.02, 0.98), k=st.integers(0, 60))
def test_funk_hecke_two_paths(N, frac, k):
    t = frac * N
    a = funk_hecke_eigenvalue(N, t, k)
    b = funk_hecke_eigenvalue_loggamma(N, t, k)
    assert a > 0
    assert a == pytest.approx(b, rel=1e-11)


@settings(max_examples=100, deadline=None)
@given(N=st.integers(5, 12), frac=st.floats(0.02, 0.98), k=st.integers(0, 40))
def test_funk_hecke_decreasing_for_t_below_half(N, frac, k):
    # ratio (k + t/2)/(k + N - t/2) < 1 iff t < N
    t = frac * N
    assert funk_hecke_eigenvalue(N, t, k + 1) < funk_hecke_eigenvalue(N, t, k)


def test_harmonic_dim():
    # S^2: 2k+1
    for k in range(6):
        assert harmonic_dim(2, k) == 2 * k + 1
    assert harmonic_dim(5, 1) == 6
    # S^N degree 2: (N+1)(N+2)/2 - 1
    for N in range(2, 10):
        assert harmonic_dim(N, 2) == (N + 1) * (N + 2) // 2 - 1


def test_admissibility():
    assert admissibility_bound(5) == pytest.approx(2.0)
    assert admissibility_bound(8) == pytest.approx(4.0)
    ok, diag = check_admissible(5, 2.0)
    assert not ok and any("N - 5" in d for d in diag)
    ok, diag = check_admissible(4, 1.0)
    assert not ok and any("N >= 5" in d for d in diag)
    assert check_admissible(6, 1.0) == (True, [])
    with pytest.raises(DomainError):
        SystemParams(5, 0.0)


@settings(max_examples=100, deadline=None)
@given(N=st.integers(5, 14), frac=st.floats(0.01, 0.99))
def test_pde_constant_identity(N, frac):
    # N(N-2) = I(N-alpha) C^((2 alpha + 4)/(N-2))
    a = frac * min(admissibility_bound(N), N)
    P = SystemParams(N, a)
    C = P.constants.C_N_alpha
    assert P.constants.I_system * C ** ((2 * a + 4) / (N - 2)) == pytest.approx(N * (N - 2), rel=1e-11)


def test_kernel_exponent_and_hls():
    assert KernelExponent(3.0).check(5) == 3.0
    with pytest.raises(DomainError):
        KernelExponent(6.0).check(5)
    with pytest.raises(DomainError):
        KernelExponent(-1.0)
    assert hls_sharp_constant(5, 4.0) > 0


def test_params_frozen_and_derived():
    P = SystemParams(6, 1.0)
    assert P.two_star_alpha == pytest.approx(7 / 4)
    assert P.mu == 5.0
    with pytest.raises(Exception):
        P.N = 7
    c = P.constants
    assert c.C_conv_system == pytest.approx(c.I_system * c.C_N_alpha ** c.two_star)
    assert c.lambda0_N2 == pytest.approx(funk_hecke_eigenvalue(6, 4, 0))
