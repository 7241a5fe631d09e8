import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hartree_system.nondegeneracy import (double_kernel_eigenvalue, harmonic_mode,
                                          integral_system_fixed_point_check, kernel_dimension,
                                          mu0_closed_form, nondegeneracy_report, sphere_kernel_integral,
                                          sphere_rule, spectral_multiplier)
from hartree_system.params_special import DomainError, SystemParams, funk_hecke_eigenvalue

from conftest import admissible_alphas

GRID = [(N, a) for N in range(5, 11) for a in admissible_alphas(N)]


@pytest.mark.parametrize("N,alpha", GRID)
def test_mu1_is_one_and_others_separated(N, alpha):
    P = SystemParams(N, alpha)
    assert abs(spectral_multiplier(P, 1) - 1) <= 1e-12
    others = [abs(spectral_multiplier(P, k) - 1) for k in range(51) if k != 1]
    assert min(others) >= 1e-3
    rep = nondegeneracy_report(P)
    assert rep.verdict == "nondegenerate" and rep.anomaly_k is None and rep.paths_agree


@settings(max_examples=100, deadline=None)
@given(N=st.integers(5, 16), frac=st.floats(0.01, 0.99))
def test_mu0_closed_form_and_monotone(N, frac):
    a = frac * min(N - 5 + 6 / (N - 2), N)
    P = SystemParams(N, a)
    assert spectral_multiplier(P, 0) == pytest.approx(mu0_closed_form(P), rel=1e-12)
    m = [spectral_multiplier(P, k) for k in range(8)]
    assert all(x > y for x, y in zip(m, m[1:]))


def test_report_detects_injected_anomaly(p6):
    def fake(P, k):
        return 1.0 if k == 3 else spectral_multiplier(P, k)
    rep = nondegeneracy_report(p6, kmax=10, multiplier=fake)
    assert rep.verdict == "anomaly" and rep.anomaly_k == 3
    assert rep.to_dict()["verdict"] == "anomaly(3)"


def test_report_domain_and_dimension(p6):
    with pytest.raises(DomainError):
        nondegeneracy_report(p6, kmax=1)
    assert kernel_dimension(6) == 14
    d = nondegeneracy_report(p6, kmax=3).to_dict()
    assert [r["k"] for r in d["rows"]] == [0, 1, 2, 3]
    assert d["rows"][1]["crosses_one"]


def test_sphere_rule_exactness():
    pts, w = sphere_rule(4, 6)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1)
    area = 2 * np.pi ** 2
    assert w.sum() == pytest.approx(area)
    # int x_1^2 = area / d ; int x_1^4 = 3 area / (d (d+2))
    assert np.dot(w, pts[:, 0] ** 2) == pytest.approx(area / 4)
    assert np.dot(w, pts[:, 1] ** 4) == pytest.approx(3 * area / 24)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_sphere_kernel_integral_is_funk_hecke(k):
    N, t = 5, 3.4
    Y = harmonic_mode(N, k, 1 if k == 0 else 2)
    xi = np.array([0.3, -0.2, 0.5, 0.1, 0.6, 0.5])
    xi /= np.linalg.norm(xi)
    got = sphere_kernel_integral(Y, xi, t, k)
    assert got == pytest.approx(funk_hecke_eigenvalue(N, t, k) * Y(xi[None])[0], rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_fixed_point_check_two_paths(p5, k):
    applied, expected = integral_system_fixed_point_check(p5, k)
    assert applied == pytest.approx(expected, rel=1e-9)


def test_fixed_point_linear_in_coefficient(p5):
    a1, e1 = integral_system_fixed_point_check(p5, 1, coefficient=1.0)
    a2, e2 = integral_system_fixed_point_check(p5, 1, coefficient=-2.5)
    assert a2 == pytest.approx(-2.5 * a1, rel=1e-12)


def test_double_kernel_eigenvalue_definition(p6):
    p = p6.two_star_alpha
    lam = lambda t, k: funk_hecke_eigenvalue(6, t, k)
    assert double_kernel_eigenvalue(p6, 2) == pytest.approx(lam(4, 2) * (p * lam(5, 2) + (p - 1) * lam(5, 0)))
