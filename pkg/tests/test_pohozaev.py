import numpy as np
import pytest

from hartree_system.bubble import Bubble
from hartree_system.multibubble import PolygonConfig
from hartree_system.params_special import DomainError
from hartree_system.pohozaev import (BubbleField, PohozaevDomain, RadialBump, ZeroField, identity_check_d12,
                                     pohozaev_dilation_residual, pohozaev_scaling_residual,
                                     pohozaev_translation_residual)
from hartree_system.quadrature import MonteCarloSpec
from hartree_system.reduced_energy import PotentialPair

MC = MonteCarloSpec(100_000, 3)
C = np.array([1.0, 0.0, 0.0, 0.0, 0.0])


@pytest.fixture
def dom():
    return PohozaevDomain.default(1.0, (0.0, 0.0, 0.0), 0.1)


@pytest.fixture
def bubble(p5):
    return BubbleField(Bubble(p5, C, 30.0))


def test_domain_validation():
    with pytest.raises(DomainError):
        PohozaevDomain(1.0, (0, 0, 0), 0.15, delta=0.1)
    with pytest.raises(DomainError):
        PohozaevDomain(1.0, (0, 0, 0), 0.55, delta=0.1)
    with pytest.raises(DomainError):
        PohozaevDomain(0.3, (0, 0, 0), 0.35)
    d = PohozaevDomain.default(1.0, (0, 0, 0), 0.1)
    assert d.rho == pytest.approx(0.35)
    assert d.contains(np.array([[0.0, 1.2, 0.1, 0.0, 0.0]]))[0]
    assert not d.contains(np.array([[0.0, 0.0, 0.0, 0.0, 0.0]]))[0]


def test_domain_volume_matches_monte_carlo(dom):
    lo, hi = dom.bounding_box()
    x = lo + (hi - lo) * np.random.default_rng(0).random((400_000, 5))
    est = np.prod(hi - lo) * dom.contains(x).mean()
    assert est == pytest.approx(dom.volume(), rel=0.02)


def test_exact_bubble_residuals_vanish(p5, dom, bubble):
    d1 = pohozaev_dilation_residual(bubble, bubble, 1.0, 1.0, dom, MC)
    d2 = pohozaev_translation_residual(bubble, bubble, 1.0, 1.0, dom, 3, MC)
    cfg = PolygonConfig(1, 1.0, (0, 0, 0), 30.0, p5)
    d3 = pohozaev_scaling_residual(bubble, bubble, cfg, None, 1.0, 1.0, MC)
    for r in (d1, d2, d3):
        assert r.is_zero(), r.to_dict()
        assert r.magnitude > 0


def test_zero_fields_give_zero(p5, dom):
    z = ZeroField(p5)
    v, se = pohozaev_dilation_residual(z, z, 1.0, 1.0, dom, MonteCarloSpec(2000, 1))
    assert v == 0 and se == 0


def test_wrong_potential_is_detected(p5, dom, bubble):
    # with constant K the residual is (1 - K^2)(-Delta U)
    d1 = pohozaev_dilation_residual(bubble, bubble, 1.1, 1.1, dom, MC)
    assert not d1.is_zero()


def test_translation_residual_tracks_tilt(p5, dom, bubble):
    # an odd tilt in x_3 breaks the reflection symmetry
    tilt = lambda x: 1.0 + 0.5 * x[..., 2]
    flip = lambda x: 1.0 - 0.5 * x[..., 2]
    a = pohozaev_translation_residual(bubble, bubble, tilt, tilt, dom, 3, MC)
    b = pohozaev_translation_residual(bubble, bubble, flip, flip, dom, 3, MC)
    assert not a.is_zero()
    assert a.value == pytest.approx(-b.value, rel=0.05)
    with pytest.raises(DomainError):
        pohozaev_translation_residual(bubble, bubble, 1.0, 1.0, dom, 2, MC)


def test_symmetric_potential_translation_zero(p5, dom, bubble):
    pot = PotentialPair(1.0, (0.0, 0.0, 0.0), -np.eye(4), -np.eye(4), delta=0.1)
    r = pohozaev_translation_residual(bubble, bubble, pot.K(1), pot.K(2), dom, 4, MonteCarloSpec(50_000, 5))
    assert r.is_zero()


def test_deterministic_for_seed(dom, bubble):
    a = pohozaev_dilation_residual(bubble, bubble, 1.0, 1.0, dom, MonteCarloSpec(20_000, 9))
    b = pohozaev_dilation_residual(bubble, bubble, 1.0, 1.0, dom, MonteCarloSpec(20_000, 9))
    assert a.to_dict() == b.to_dict()


def _bumps(amp_u=1.0, amp_v=1.0):
    return RadialBump(C, 0.15, amp_u), RadialBump(C, 0.12, amp_v)


def test_identity_d12_flat(p5, dom):
    u, v = _bumps(1.0, 0.7)
    lhs, rhs = identity_check_d12(u, v, 1.0, 1.0, dom, p5, nodes=48, conv_nodes=8)
    assert abs(lhs - rhs) <= 1e-4 * max(abs(lhs), abs(rhs))


def test_identity_d12_radial_potential(p5, dom):
    u, v = _bumps()
    k1 = lambda s: 1.0 - 0.5 * s ** 2
    k2 = lambda s: 1.2 - s ** 2
    lhs, rhs = identity_check_d12(u, v, k1, k2, dom, p5, nodes=48, conv_nodes=8)
    assert abs(lhs - rhs) <= 1e-4 * max(abs(lhs), abs(rhs))


def test_identity_d12_block_scaling(p5, dom):
    u, v = _bumps()
    u2, v2 = _bumps(2.0, 2.0)
    p = p5.two_star_alpha
    a = identity_check_d12(u, v, 1.0, 1.0, dom, p5, nodes=32, conv_nodes=6, blocks=True)
    b = identity_check_d12(u2, v2, 1.0, 1.0, dom, p5, nodes=32, conv_nodes=6, blocks=True)
    assert b["lhs_grad"] == pytest.approx(4 * a["lhs_grad"], rel=1e-10)
    assert b["rhs_grad"] == pytest.approx(4 * a["rhs_grad"], rel=1e-10)
    assert b["lhs_conv"] == pytest.approx(2 ** (2 * p) * a["lhs_conv"], rel=1e-8)
    z = identity_check_d12(RadialBump(C, 0.15, 0.0), RadialBump(C, 0.12, 0.0), 1.0, 1.0, dom, p5,
                           nodes=16, conv_nodes=8)
    assert z == (0.0, 0.0)


def test_identity_d12_support_checks(p5, dom):
    with pytest.raises(DomainError):
        identity_check_d12(RadialBump(C, 0.3), RadialBump(C, 0.1), 1.0, 1.0, dom, p5)
    with pytest.raises(DomainError):
        identity_check_d12(RadialBump(C, 0.1), RadialBump(C + 0.01, 0.1), 1.0, 1.0, dom, p5)
