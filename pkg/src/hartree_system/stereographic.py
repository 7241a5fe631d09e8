"""Stereographic projection between R^N and S^N and the induced weighted transport."""
from __future__ import annotations

from typing import Callable

import numpy as np

from .params_special import DomainError, SystemParams

SOUTH_POLE_GUARD = 1e-9


class SingularPointError(DomainError):
    """Raised when the inverse projection is asked for the south pole."""


def stereo_forward(x):
    """S(x) = (2x/(1+|x|^2), (1-|x|^2)/(1+|x|^2)); x of shape (..., N)."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1, keepdims=True)
    return np.concatenate([2.0 * x / (1.0 + r2), (1.0 - r2) / (1.0 + r2)], axis=-1)


def _guard(xi):
    xi = np.asarray(xi, dtype=float)
    if np.any(1.0 + xi[..., -1] <= SOUTH_POLE_GUARD):
        raise SingularPointError("point too close to the south pole")
    return xi


def stereo_inverse(xi):
    """S^(-1)(xi) = xi_(1..N)/(1 + xi_(N+1))."""
    xi = _guard(xi)
    return xi[..., :-1] / (1.0 + xi[..., -1:])


def stereo_jacobian(x):
    """J_S(x) = (2/(1+|x|^2))^N."""
    x = np.asarray(x, dtype=float)
    N = x.shape[-1]
    return (2.0 / (1.0 + np.sum(x * x, axis=-1))) ** N


def conformal_factor(x):
    """r(x) = (2/(1+|x|^2))^(1/2), so |Sx - Sy| = |x-y| r(x) r(y)."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(2.0 / (1.0 + np.sum(x * x, axis=-1)))


def distance_identity_check(x, y):
    """Both sides of |S(x) - S(y)| = |x - y| r(x) r(y)."""
    lhs = np.linalg.norm(stereo_forward(x) - stereo_forward(y), axis=-1)
    rhs = np.linalg.norm(np.asarray(x, float) - np.asarray(y, float), axis=-1) * conformal_factor(x) * conformal_factor(y)
    return lhs, rhs


def pushforward(h: Callable, xi):
    """(S_* h)(xi) = J_S^((2-N)/(2N))(S^(-1) xi) h(S^(-1) xi)."""
    xi = _guard(xi)
    N = xi.shape[-1] - 1
    x = stereo_inverse(xi)
    return stereo_jacobian(x) ** ((2.0 - N) / (2.0 * N)) * np.asarray(h(x), dtype=float)


def pullback(H: Callable, x):
    """(S^* H)(x) = J_S^((N-2)/(2N))(x) H(S x)."""
    x = np.asarray(x, dtype=float)
    N = x.shape[-1]
    return stereo_jacobian(x) ** ((N - 2.0) / (2.0 * N)) * np.asarray(H(stereo_forward(x)), dtype=float)


def kernel_pushforward_closed_form(index: int, params: SystemParams, xi):
    """Closed forms of S_* phi_j = (2-N) 2^(-N/2) C xi_j and S_* phi_(N+1) = (N-2) 2^(-N/2) C xi_(N+1)."""
    N = params.N
    C = params.constants.C_N_alpha
    xi = np.asarray(xi, dtype=float)
    if not 1 <= index <= N + 1:
        raise DomainError("index out of range")
    sign = (N - 2.0) if index == N + 1 else (2.0 - N)
    return sign * 2.0 ** (-N / 2.0) * C * xi[..., index - 1]


def sample_sphere(rng, n, N):
    """n uniform points on S^N (normalised Gaussians in R^(N+1))."""
    g = rng.standard_normal((n, N + 1))
    return g / np.linalg.norm(g, axis=1, keepdims=True)
