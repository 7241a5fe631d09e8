"""Mode-by-mode spectral test of the linearised system after transport to S^N.

For a degree-k spherical harmonic the double-kernel operator acts as the scalar
lambda_k(N-2) [p lambda_k(N-alpha) + (p-1) lambda_0(N-alpha)]; after the
normalisation constants this becomes mu_k, and the kernel is nondegenerate
when mu_k = 1 exactly for k = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .params_special import DomainError, SystemParams, funk_hecke_eigenvalue, harmonic_dim
from .quadrature import gauss_jacobi, gegenbauer_normalized

NUMERIC_FLOOR = 1e-13


def _prefactor(params: SystemParams) -> float:
    c = params.constants
    p = params.two_star_alpha
    return c.C_N * c.C_N_alpha ** ((2 * params.alpha + 4) / (params.N - 2)) * 2.0 ** (-(p - 1.0) * (params.N - 2))


def double_kernel_eigenvalue(params: SystemParams, k: int) -> float:
    """lambda_k(N-2) [p lambda_k(N-alpha) + (p-1) lambda_0(N-alpha)]."""
    N, a = params.N, params.alpha
    p = params.two_star_alpha
    return funk_hecke_eigenvalue(N, N - 2, k) * (
        p * funk_hecke_eigenvalue(N, N - a, k) + (p - 1.0) * funk_hecke_eigenvalue(N, N - a, 0)
    )


def spectral_multiplier(params: SystemParams, k: int) -> float:
    """mu_k; the linearised system has degree-k kernel elements iff mu_k = 1."""
    if k < 0:
        raise DomainError("k must be >= 0")
    return _prefactor(params) * double_kernel_eigenvalue(params, k)


def mu0_closed_form(params: SystemParams) -> float:
    """mu_0 = 2 p - 1 = (N + 2 alpha + 2)/(N - 2), using mu_1 = 1."""
    return (params.N + 2.0 * params.alpha + 2.0) / (params.N - 2.0)


def kernel_dimension(N: int) -> int:
    """Number of free coefficients in the kernel of the linearised system."""
    if N < 5:
        raise DomainError("N >= 5 required")
    return 2 * (N + 1)


@dataclass
class SpectralReport:
    params: SystemParams
    rows: list = field(default_factory=list)  # (k, lambda_k(N-2), lambda_k(N-alpha), mu_k, crosses_one)
    verdict: str = "nondegenerate"
    anomaly_k: int | None = None
    tol: float = 1e-9
    paths_agree: bool = True

    def to_dict(self):
        return {
            "N": self.params.N,
            "alpha": self.params.alpha,
            "tol": self.tol,
            "verdict": self.verdict if self.anomaly_k is None else f"anomaly({self.anomaly_k})",
            "kernel_dimension": kernel_dimension(self.params.N),
            "rows": [
                {"k": k, "lambda_k_N2": l1, "lambda_k_Nalpha": l2, "mu_k": m, "crosses_one": c}
                for k, l1, l2, m, c in self.rows
            ],
        }


def nondegeneracy_report(params: SystemParams, kmax: int = 50, tol: float = 1e-9,
                         multiplier: Callable | None = None) -> SpectralReport:
    """Evaluate mu_k for k = 0..kmax and decide whether only k = 1 sits at 1.

    `multiplier(params, k)` may replace spectral_multiplier (used to test the detector).
    """
    if kmax < 2:
        raise DomainError("kmax must be >= 2")
    mult = multiplier or spectral_multiplier
    N, a = params.N, params.alpha
    rep = SpectralReport(params, tol=tol)
    for k in range(kmax + 1):
        m = mult(params, k)
        hit = abs(m - 1.0) <= tol
        # the system form of the condition is mu_k^2 = 1 with mu_k > 0
        hit_sq = m > 0 and abs(m * m - 1.0) <= tol * (1.0 + m)
        rep.paths_agree = rep.paths_agree and hit == hit_sq
        rep.rows.append((k, funk_hecke_eigenvalue(N, N - 2, k), funk_hecke_eigenvalue(N, N - a, k), m, hit))
        if hit != (k == 1) and rep.anomaly_k is None:
            rep.verdict = "anomaly"
            rep.anomaly_k = k
    return rep


# ---------------------------------------------------------------------------
# independent check of the double-kernel operator by quadrature on S^N


@lru_cache(maxsize=64)
def sphere_rule(d: int, degree: int):
    """Product cubature on S^(d-1) in R^d, exact for polynomials up to `degree`."""
    if d == 2:
        n = degree + 1
        th = 2.0 * math.pi * np.arange(n) / n
        pts = np.stack([np.cos(th), np.sin(th)], axis=1)
        return pts, np.full(n, 2.0 * math.pi / n)
    a = (d - 3) / 2.0
    t, wt = gauss_jacobi(degree // 2 + 1, a, a)
    sub, wsub = sphere_rule(d - 1, degree)
    pts = np.concatenate(
        [np.concatenate([np.full((sub.shape[0], 1), ti), math.sqrt(1 - ti * ti) * sub], axis=1) for ti in t]
    )
    w = np.concatenate([wi * wsub for wi in wt])
    return pts, w


def _orth_complement(xi):
    # columns span xi^perp
    q, _ = np.linalg.qr(np.concatenate([xi[:, None], np.eye(xi.size)], axis=1))
    return q[:, 1:xi.size]


def sphere_kernel_integral(F: Callable, xi, t: float, degree: int):
    """int_{S^N} |xi - eta|^(-t) F(eta) d eta for F polynomial of degree <= `degree`.

    Polar coordinates about xi: eta = s xi + sqrt(1-s^2) B omega.  The omega
    integral uses an exact product cubature; the s integral uses Gauss-Jacobi
    with the endpoint factor (1-s)^(-t/2) (1-s^2)^((N-2)/2) in its weight.
    """
    xi = np.asarray(xi, dtype=float)
    N = xi.size - 1
    a = (N - 2.0 - t) / 2.0
    b = (N - 2.0) / 2.0
    s, ws = gauss_jacobi(degree + 2, a, b)
    omega, wo = sphere_rule(N, max(degree, 1))
    B = _orth_complement(xi)
    tang = omega @ B.T
    total = 0.0
    for si, wi in zip(s, ws):
        eta = si * xi + math.sqrt(max(1.0 - si * si, 0.0)) * tang
        total += wi * float(np.dot(wo, F(eta)))
    return 2.0 ** (-t / 2.0) * total


def harmonic_mode(N: int, k: int, mode_index: int) -> Callable:
    """A degree-k harmonic on S^N: 1, xi_i, or the zonal P_k(xi . e_i)."""
    if not 1 <= mode_index <= min(N + 1, harmonic_dim(N, k)):
        raise DomainError("mode_index out of range")
    i = mode_index - 1
    if k == 0:
        return lambda eta: np.ones(np.shape(eta)[:-1])
    if k == 1:
        return lambda eta: np.asarray(eta)[..., i]
    nu = (N - 1.0) / 2.0
    return lambda eta: gegenbauer_normalized(k, nu, np.clip(np.asarray(eta)[..., i], -1.0, 1.0))


def integral_system_fixed_point_check(params: SystemParams, k: int, mode_index: int = 1,
                                      xi=None, coefficient: float = 1.0):
    """(applied, expected) for the double-kernel operator acting on a degree-k mode at xi.

    applied is computed by nested quadrature on S^N without using the Funk-Hecke
    eigenvalues; expected = lambda_k(N-2)[p lambda_k(N-alpha) + (p-1) lambda_0(N-alpha)] Y(xi).
    """
    N, a = params.N, params.alpha
    p = params.two_star_alpha
    Y0 = harmonic_mode(N, k, mode_index)

    def Y(eta):
        return coefficient * Y0(eta)

    if xi is None:
        xi = np.arange(1.0, N + 2.0)
        xi = xi / np.linalg.norm(xi)
    xi = np.asarray(xi, dtype=float)

    def inner_mode(eta):
        return np.array([sphere_kernel_integral(Y, e, N - a, k) for e in np.atleast_2d(eta)])

    const = sphere_kernel_integral(lambda e: np.ones(np.shape(e)[:-1]), xi, N - a, 0)  # rotation invariant

    first = sphere_kernel_integral(inner_mode, xi, N - 2, k)
    second = const * sphere_kernel_integral(Y, xi, N - 2, k)
    applied = p * first + (p - 1.0) * second
    expected = double_kernel_eigenvalue(params, k) * float(Y(xi[None, :])[0])
    return applied, expected
