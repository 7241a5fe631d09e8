"""System parameters, a hand-rolled gamma function and the closed-form constants.

Every constant the rest of the package needs (bubble amplitude, Riesz
self-convolution constant, Funk-Hecke eigenvalues, ...) is computed here from
one Lanczos gamma so that reports are reproducible bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class NonIntegrableError(DomainError):
    """Raised when a requested integral has a non-integrable singularity."""


# Lanczos approximation, g = 7, n = 9 (Numerical Recipes / Godfrey coefficients)
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _lanczos_series(z):
    # z is the shifted argument x - 1
    a = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        a += _LANCZOS_COEF[i] / (z + i)
    return a


def log_gamma(x: float) -> float:
    """log Gamma(x) for x > 0."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    if x < 0.5:
        # reflection keeps the series in its accurate range
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(_lanczos_series(z))


def gamma_fn(x: float) -> float:
    """Gamma(x) for x > 0 (about 15 significant digits, 13 near the overflow limit)."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"gamma_fn requires x > 0, got {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    if x == math.floor(x) and x <= 30:
        return float(math.factorial(int(x) - 1))
    if x > 171.6:
        raise OverflowError("gamma_fn overflows for x > 171.6")
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    # split t^(z+1/2) so neither factor overflows before exp(-t) is applied
    h = t ** (0.5 * (z + 0.5))
    return math.sqrt(2.0 * math.pi) * h * (h * math.exp(-t)) * _lanczos_series(z)


def sphere_surface_area(n: int) -> float:
    """|S^(n-1)|, the surface area of the unit sphere in R^n."""
    if int(n) != n or n < 1:
        raise DomainError(f"sphere dimension must be an integer >= 1, got {n}")
    return 2.0 * math.pi ** (n / 2.0) / gamma_fn(n / 2.0)


def _check_mu(N, mu):
    mu = float(getattr(mu, "mu", mu))
    if not 0.0 < mu < N:
        raise DomainError(f"kernel exponent must lie in (0, {N}), got {mu}")
    return mu


@dataclass(frozen=True)
class KernelExponent:
    """Exponent mu of the Riesz kernel |x|^(-mu)."""

    mu: float

    def __post_init__(self):
        if not self.mu > 0.0:
            raise DomainError(f"kernel exponent must be positive, got {self.mu}")

    def check(self, N: int) -> float:
        return _check_mu(N, self.mu)


def hls_sharp_constant(N: int, mu) -> float:
    """Sharp Hardy-Littlewood-Sobolev constant for the kernel |x|^(-mu)."""
    mu = _check_mu(N, mu)
    return (
        math.pi ** (mu / 2.0)
        * gamma_fn(N / 2.0 - mu / 2.0)
        / gamma_fn(N - mu / 2.0)
        * (gamma_fn(N / 2.0) / gamma_fn(N)) ** (-1.0 + mu / N)
    )


def harmonic_dim(N: int, k: int) -> int:
    """Dimension of the degree-k spherical harmonics on S^N (inside R^(N+1))."""
    if k < 0:
        raise DomainError(f"degree must be >= 0, got {k}")
    if k == 0:
        return 1
    if k == 1:
        return N + 1
    return math.comb(k + N, k) - math.comb(k + N - 2, k - 2)


def funk_hecke_eigenvalue(N: int, t: float, k: int) -> float:
    """Eigenvalue of the kernel |xi - eta|^(-t) on degree-k harmonics of S^N.

    lambda_0 comes from the gamma closed form; higher modes use the exact ratio
    lambda_(k+1)/lambda_k = (k + t/2)/(k + N - t/2).
    """
    if k < 0:
        raise DomainError(f"degree must be >= 0, got {k}")
    t = float(t)
    if not 0.0 < t < N:
        raise DomainError(f"t must lie in (0, {N}), got {t}")
    lam = (
        2.0 ** (N - t)
        * math.pi ** (N / 2.0)
        * gamma_fn((N - t) / 2.0)
        / gamma_fn(N - t / 2.0)
    )
    for j in range(k):
        lam *= (j + t / 2.0) / (j + N - t / 2.0)
    return lam


def funk_hecke_eigenvalue_loggamma(N: int, t: float, k: int) -> float:
    """Same eigenvalue evaluated directly from the four-gamma closed form."""
    if not 0.0 < t < N:
        raise DomainError(f"t must lie in (0, {N}), got {t}")
    lg = (
        log_gamma(k + t / 2.0)
        + log_gamma((N - t) / 2.0)
        - log_gamma(t / 2.0)
        - log_gamma(k + N - t / 2.0)
    )
    return 2.0 ** (N - t) * math.pi ** (N / 2.0) * math.exp(lg)


def riesz_selfconv_constant(N: int, mu) -> float:
    """I(mu/2): |x|^(-mu) * (1+|y|^2)^(-(2N-mu)/2) = I(mu/2) (1+|x|^2)^(-mu/2)."""
    mu = _check_mu(N, mu)
    return math.pi ** (N / 2.0) * gamma_fn((N - mu) / 2.0) / gamma_fn(N - mu / 2.0)


def admissibility_bound(N: int) -> float:
    return N - 5.0 + 6.0 / (N - 2.0)


def check_admissible(N, alpha) -> tuple[bool, list[str]]:
    """Return (ok, diagnostics) for the pair (N, alpha)."""
    problems = []
    if int(N) != N:
        problems.append(f"N must be an integer, got {N}")
    elif N < 5:
        problems.append(f"N >= 5 violated (N = {N})")
    if not 0.0 < alpha:
        problems.append(f"alpha > 0 violated (alpha = {alpha})")
    if not alpha < N:
        problems.append(f"alpha < N violated (alpha = {alpha}, N = {N})")
    if N > 2 and not alpha < admissibility_bound(N):
        problems.append(
            f"alpha < N - 5 + 6/(N-2) = {admissibility_bound(N):.6g} violated (alpha = {alpha})"
        )
    return (not problems, problems)


def bubble_amplitude_raw(N: int, alpha: float) -> float:
    base = N * (N - 2) * gamma_fn((N + alpha) / 2.0) / (math.pi ** (N / 2.0) * gamma_fn(alpha / 2.0))
    return base ** ((N - 2.0) / (2.0 * alpha + 4.0))


@dataclass(frozen=True)
class DerivedConstants:
    two_star: float
    C_N_alpha: float
    C_N: float
    I_system: float      # riesz_selfconv_constant(N, N - alpha)
    C_conv_system: float  # I_system * C_N_alpha ** two_star
    lambda0_N2: float
    lambda0_Nalpha: float


@dataclass(frozen=True)
class SystemParams:
    """Dimension N and convolution parameter alpha; admissibility checked on construction."""

    N: int
    alpha: float

    def __post_init__(self):
        ok, diag = check_admissible(self.N, self.alpha)
        if not ok:
            raise DomainError("; ".join(diag))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def two_star_alpha(self) -> float:
        return (self.N + self.alpha) / (self.N - 2)

    @property
    def mu(self) -> float:
        """Exponent of the system kernel |x|^(-(N-alpha))."""
        return self.N - self.alpha

    @cached_property
    def constants(self) -> DerivedConstants:
        N, a = self.N, self.alpha
        p = self.two_star_alpha
        C = bubble_amplitude_raw(N, a)
        I_sys = riesz_selfconv_constant(N, N - a)
        return DerivedConstants(
            two_star=p,
            C_N_alpha=C,
            C_N=gamma_fn(N / 2.0) / (2.0 * (N - 2) * math.pi ** (N / 2.0)),
            I_system=I_sys,
            C_conv_system=I_sys * C ** p,
            lambda0_N2=funk_hecke_eigenvalue(N, N - 2, 0),
            lambda0_Nalpha=funk_hecke_eigenvalue(N, N - a, 0),
        )


def bubble_amplitude(params: SystemParams) -> float:
    """C_(N,alpha), the amplitude of the bubble solution."""
    if not isinstance(params, SystemParams):
        raise DomainError("bubble_amplitude expects SystemParams")
    return params.constants.C_N_alpha
