"""Exact bubble pair of the unperturbed system, its kernel basis and linearisation.

All evaluators are vectorised: points are arrays of shape (..., N).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .params_special import DomainError, SystemParams, riesz_selfconv_constant
from .quadrature import radial_convolution, riesz_convolution_mc


@dataclass(frozen=True)
class Bubble:
    """U_(z,lambda)(x) = C_(N,alpha) (lambda / (1 + lambda^2 |x-z|^2))^((N-2)/2)."""

    params: SystemParams
    center: np.ndarray = None
    scale: float = 1.0

    def __post_init__(self):
        N = self.params.N
        c = np.zeros(N) if self.center is None else np.asarray(self.center, dtype=float)
        if c.shape != (N,):
            raise DomainError(f"center must have shape ({N},)")
        if not self.scale > 0:
            raise DomainError("scale must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def peak(self) -> float:
        return self.params.constants.C_N_alpha * self.scale ** ((self.params.N - 2) / 2.0)


@dataclass(frozen=True)
class BubblePair:
    """Synchronised solution pair (U, V) with U = V."""

    u: Bubble
    v: Bubble = None

    def __post_init__(self):
        if self.v is None:
            object.__setattr__(self, "v", self.u)
        same = (self.u.params == self.v.params and self.u.scale == self.v.scale
                and np.array_equal(self.u.center, self.v.center))
        if not same:
            raise DomainError("bubble pair must share center, scale and params")


@dataclass(frozen=True)
class KernelBasisElement:
    """phi_j (translation, j = 1..N) or phi_(N+1) (dilation)."""

    index: int
    N: int

    def __post_init__(self):
        if not 1 <= self.index <= self.N + 1:
            raise DomainError(f"kernel basis index must be in 1..{self.N + 1}")

    @property
    def role(self):
        return "dilation" if self.index == self.N + 1 else ("translation", self.index)


def _sq(b: Bubble, x):
    x = np.asarray(x, dtype=float)
    return np.sum((x - b.center) ** 2, axis=-1)


def bubble_eval(b: Bubble, x):
    N = b.params.N
    lam = b.scale
    return b.params.constants.C_N_alpha * (lam / (1.0 + lam * lam * _sq(b, x))) ** ((N - 2) / 2.0)


def bubble_gradient(b: Bubble, x):
    """Gradient of U in x; shape (..., N)."""
    N = b.params.N
    lam = b.scale
    x = np.asarray(x, dtype=float)
    q = 1.0 + lam * lam * _sq(b, x)
    u = bubble_eval(b, x)
    return ((2.0 - N) * lam * lam * u / q)[..., None] * (x - b.center)


def bubble_laplacian(b: Bubble, x):
    """-Delta U, in closed form."""
    N = b.params.N
    lam = b.scale
    C = b.params.constants.C_N_alpha
    return N * (N - 2) * C * lam ** ((N + 2) / 2.0) * (1.0 + lam * lam * _sq(b, x)) ** (-(N + 2) / 2.0)


def bubble_dlambda(b: Bubble, x):
    """dU/dlambda at fixed center."""
    N = b.params.N
    lam = b.scale
    r2 = _sq(b, x)
    return (N - 2) / 2.0 * bubble_eval(b, x) * (1.0 - lam * lam * r2) / (lam * (1.0 + lam * lam * r2))


def kernel_basis_eval(e: KernelBasisElement, x, params: SystemParams):
    """phi_j or phi_(N+1) of the unit bubble (center 0, scale 1)."""
    N = params.N
    if e.N != N:
        raise DomainError("basis element dimension does not match params")
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    u = bubble_eval(Bubble(params), x)
    if e.index == N + 1:
        return (N - 2) / 2.0 * u * (1.0 - r2) / (1.0 + r2)
    return (2.0 - N) * u * x[..., e.index - 1] / (1.0 + r2)


def kernel_basis_neg_laplacian(e: KernelBasisElement, x, params: SystemParams):
    """-Delta of phi_j / phi_(N+1) (unit bubble), differentiated from -Delta U."""
    N = params.N
    C = params.constants.C_N_alpha
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    a = N * (N - 2) * C
    if e.index == N + 1:
        return a * (N + 2) / 2.0 * (1.0 - r2) * (1.0 + r2) ** (-(N + 4) / 2.0)
    return -a * (N + 2) * x[..., e.index - 1] * (1.0 + r2) ** (-(N + 4) / 2.0)


def riesz_convolution_bubble(mu, b: Bubble, x):
    """(|.|^(-mu) * U^((2N-mu)/(N-2)))(x) in closed form."""
    N = b.params.N
    mu = float(getattr(mu, "mu", mu))
    I = riesz_selfconv_constant(N, mu)
    C = b.params.constants.C_N_alpha
    lam = b.scale
    return I * C ** ((2 * N - mu) / (N - 2)) * (lam / (1.0 + lam * lam * _sq(b, x))) ** (mu / 2.0)


def _potential(K, x):
    if callable(K):
        return np.asarray(K(x), dtype=float)
    return np.full(np.shape(x)[:-1], float(K))


def convolution_with_potential(b: Bubble, K, x, n_inner=20_000, rng=None):
    """(|.|^(-(N-alpha)) * K V^p)(x); closed form for constant K, Monte Carlo otherwise.

    The Monte Carlo path only samples the remainder (K - 1) V^p, the rest is exact.
    Returns (value, std_error).
    """
    params = b.params
    mu = params.mu
    p = params.two_star_alpha
    x = np.asarray(x, dtype=float)
    base = riesz_convolution_bubble(mu, b, x)
    if not callable(K):
        return float(K) * base, np.zeros_like(base)
    rng = rng if rng is not None else np.random.default_rng(0)

    def rem(y):
        return (np.asarray(K(y), dtype=float) - 1.0) * bubble_eval(b, y) ** p

    flat = x.reshape(-1, params.N)
    est, se = riesz_convolution_mc(rem, flat, mu, b.center[None, :], 1.0 / b.scale, n_inner, rng,
                                   tail=params.alpha / 2.0)
    return base + est.reshape(base.shape), se.reshape(base.shape)


def pde_residual(pair: BubblePair, x, K1=1.0, K2=1.0, n_inner=20_000, seed=0, details=False):
    """Pointwise residuals of the system at x for the pair (u, v).

    res_u = -Delta u - K1 (|.|^(-(N-alpha)) * K1 v^p) v^(p-1), and symmetrically.
    With details=True a dict also carries the magnitude of the dominant term
    and Monte Carlo standard errors.
    """
    params = pair.u.params
    p = params.two_star_alpha
    rng = np.random.default_rng(seed)
    x = np.asarray(x, dtype=float)
    out = {}
    for name, field_eq, other, K in (("u", pair.u, pair.v, K1), ("v", pair.v, pair.u, K2)):
        lap = bubble_laplacian(field_eq, x)
        conv, se = convolution_with_potential(other, K, x, n_inner, rng)
        kx = _potential(K, x)
        nl = kx * conv * bubble_eval(other, x) ** (p - 1.0)
        out[name] = (lap - nl, np.maximum(np.abs(lap), np.abs(nl)), kx * se * bubble_eval(other, x) ** (p - 1.0))
    if details:
        return {
            "res_u": out["u"][0], "res_v": out["v"][0],
            "scale_u": out["u"][1], "scale_v": out["v"][1],
            "std_u": out["u"][2], "std_v": out["v"][2],
        }
    return out["u"][0], out["v"][0]


@dataclass(frozen=True)
class SeparableField:
    """psi(x) = f(|x - z|) * Y(x - z) with Y = 1 (degree 0) or y_axis/|y| (degree 1).

    `breaks` lists radii where f is not smooth.
    """

    profile: Callable
    degree: int = 0
    axis: int = 0
    breaks: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.degree not in (0, 1):
            raise DomainError("only angular degrees 0 and 1 are supported")

    def angular(self, y):
        if self.degree == 0:
            return np.ones(np.shape(y)[:-1])
        r = np.linalg.norm(y, axis=-1)
        return np.where(r > 0, y[..., self.axis] / np.where(r > 0, r, 1.0), 0.0)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return np.asarray(self.profile(np.linalg.norm(y, axis=-1))) * self.angular(y)


def kernel_mode(e: KernelBasisElement, params: SystemParams) -> SeparableField:
    """The kernel basis element as a separable field about the unit bubble."""
    N = params.N
    b = Bubble(params)

    def u(r):
        return bubble_eval(b, np.stack([r] + [np.zeros_like(r)] * (N - 1), axis=-1))

    if e.index == N + 1:
        return SeparableField(lambda r: (N - 2) / 2.0 * u(r) * (1.0 - r * r) / (1.0 + r * r), 0)
    return SeparableField(lambda r: (2.0 - N) * u(r) * r / (1.0 + r * r), 1, e.index - 1)


def linearized_apply(which: str, psi: SeparableField, x, params: SystemParams,
                     b: Bubble | None = None, tol: float = 1e-12, terms: bool = False):
    """T1(psi)(x) (or T2, identical for the synchronised pair) at the points x.

    T1(psi) = p (|.|^(-(N-alpha)) * V^(p-1) psi) V^(p-1) + (p-1) (|.|^(-(N-alpha)) * V^p) V^(p-2) psi,
    with the first convolution reduced to one radial integral against the
    degree-matched angular kernel.  With terms=True the two summands are
    returned separately.
    """
    if which not in ("T1", "T2"):
        raise DomainError("which must be 'T1' or 'T2'")
    b = b or Bubble(params)
    N = params.N
    p = params.two_star_alpha
    mu = params.mu
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = x - b.center
    r = np.linalg.norm(y, axis=-1)

    def vr(s):
        return bubble_eval(b, b.center + np.stack([s] + [np.zeros_like(s)] * (N - 1), axis=-1))

    def g(s):
        return vr(s) ** (p - 1.0) * psi.profile(s)

    conv = np.array([radial_convolution(mu, g, ri, N, tol=tol, degree=psi.degree, breaks=psi.breaks)
                     for ri in r])
    conv = conv * psi.angular(y)
    v = bubble_eval(b, x)
    term1 = p * conv * v ** (p - 1.0)
    term2 = (p - 1.0) * riesz_convolution_bubble(mu, b, x) * v ** (p - 2.0) * psi(y)
    if terms:
        return term1, term2
    return term1 + term2
