"""Local Pohozaev-type residuals on D_rho and the integration-by-parts rearrangement.

D_rho = {x : |(|x'|, x'') - (r0, x0'')| <= rho} is the solid torus swept by a
ball in the (r, x'') half-space.  The residual integrals pair

    R_u = -Delta u - K1 (|.|^(-(N-alpha)) * K1 v^p) v^(p-1)
    R_v = -Delta v - K2 (|.|^(-(N-alpha)) * K2 u^p) u^(p-1)

with <x, grad v>, <x, grad u> (dilation), d_i v, d_i u (translation) or the
lambda-derivatives of the ansatz (scaling).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bubble import (Bubble, bubble_eval, bubble_gradient, bubble_laplacian, convolution_with_potential,
                     riesz_convolution_bubble)
from .multibubble import (CutoffSpec, PolygonConfig, ansatz_parts, bubbles, cutoff_eval,
                          derivative_basis_eval, polygon_centers)
from .params_special import DomainError, SystemParams, sphere_surface_area
from .quadrature import (BubbleMixture, MonteCarloSpec, RunningStats, block_generator, gauss_legendre,
                         radial_convolution, riesz_convolution_mc)

ROUNDOFF_FLOOR = 1e-12


@dataclass(frozen=True)
class PohozaevDomain:
    r0: float
    x0_pp: tuple
    rho: float
    delta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "x0_pp", tuple(float(v) for v in self.x0_pp))
        if not 0 < self.rho < self.r0:
            raise DomainError("need 0 < rho < r0")
        if self.delta is not None and not 2 * self.delta < self.rho < 5 * self.delta:
            raise DomainError(f"rho = {self.rho} outside (2 delta, 5 delta) = ({2 * self.delta}, {5 * self.delta})")

    @classmethod
    def default(cls, r0, x0_pp, delta):
        return cls(r0, x0_pp, 3.5 * delta, delta)

    @property
    def N(self):
        return len(self.x0_pp) + 2

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        rho = np.linalg.norm(x[..., :2], axis=-1)
        d2 = (rho - self.r0) ** 2 + np.sum((x[..., 2:] - np.asarray(self.x0_pp)) ** 2, axis=-1)
        return d2 <= self.rho ** 2

    def bounding_box(self):
        R = self.r0 + self.rho
        lo = np.concatenate([[-R, -R], np.asarray(self.x0_pp) - self.rho])
        hi = np.concatenate([[R, R], np.asarray(self.x0_pp) + self.rho])
        return lo, hi

    def volume(self):
        # Pappus: rotate the (N-1)-ball of radius rho about the x'' axis at distance r0
        n = self.N - 1
        return 2.0 * math.pi * self.r0 * math.pi ** (n / 2) / math.gamma(n / 2 + 1) * self.rho ** n


# ---------------------------------------------------------------------------
# fields


class BubbleField:
    """A single bubble as a field: value, gradient, -Laplacian and K-weighted convolution."""

    def __init__(self, b: Bubble):
        self.b = b
        self.params = b.params
        self.anchors = b.center[None, :]
        self.scale = 1.0 / b.scale

    def value(self, x):
        return bubble_eval(self.b, x)

    def grad(self, x):
        return bubble_gradient(self.b, x)

    def neg_lap(self, x):
        return bubble_laplacian(self.b, x)

    def conv(self, K, x, rng, n_inner):
        """(|.|^(-(N-alpha)) * K w^p)(x) and its std error."""
        return convolution_with_potential(self.b, K, x, n_inner, rng)


class ZeroField(BubbleField):
    def __init__(self, params: SystemParams):
        self.params = params
        self.anchors = np.zeros((1, params.N))
        self.scale = 1.0

    def value(self, x):
        return np.zeros(np.shape(x)[:-1])

    def grad(self, x):
        return np.zeros(np.shape(x))

    def neg_lap(self, x):
        return np.zeros(np.shape(x)[:-1])

    def conv(self, K, x, rng, n_inner):
        z = np.zeros(np.shape(x)[:-1])
        return z, z


class AnsatzField:
    """Z = xi sum_j U_(z_j, lambda) from a polygon configuration and cutoff."""

    def __init__(self, cfg: PolygonConfig, cutoff: CutoffSpec | None):
        self.cfg = cfg
        self.cutoff = cutoff
        self.params = cfg.params
        self.anchors = polygon_centers(cfg)
        self.scale = 1.0 / cfg.lam
        self._bs = bubbles(cfg)

    def value(self, x):
        a = ansatz_parts(self.cfg, self.cutoff, x)
        return a["xi"] * a["Zs"]

    def grad(self, x):
        a = ansatz_parts(self.cfg, self.cutoff, x)
        return a["xi"][..., None] * a["gradZs"] + a["Zs"][..., None] * a["gradxi"]

    def neg_lap(self, x):
        a = ansatz_parts(self.cfg, self.cutoff, x)
        return a["xi"] * a["negLapZs"] - a["Zs"] * a["lapxi"] - 2.0 * np.sum(a["gradxi"] * a["gradZs"], axis=-1)

    def conv(self, K, x, rng, n_inner):
        p = self.params.two_star_alpha
        mu = self.params.mu
        x = np.atleast_2d(np.asarray(x, dtype=float))
        exact = sum(riesz_convolution_bubble(mu, b, x) for b in self._bs)
        flat = not callable(K) and float(K) == 1.0
        if flat and self.cutoff is None and self.cfg.m == 1:
            return exact, np.zeros_like(exact)
        bs, cutoff = self._bs, self.cutoff

        def remainder(y):
            v = np.stack([bubble_eval(b, y) for b in bs])
            return _pot(K, y) * (cutoff_eval(cutoff, y) * v.sum(axis=0)) ** p - np.sum(v ** p, axis=0)

        est, se = riesz_convolution_mc(remainder, x, mu, self.anchors, self.scale, n_inner, rng,
                                       tail=self.params.alpha / 2.0)
        return exact + est, se


def _pot(K, y):
    if callable(K):
        return np.asarray(K(y), dtype=float)
    return np.full(np.shape(y)[:-1], float(K))


def _residuals(u, v, K1, K2, x, rng, n_inner):
    """(R_u, R_v, scale) at x, scale being the size of the largest term."""
    p = u.params.two_star_alpha
    x = np.atleast_2d(x)
    uv, vv = u.value(x), v.value(x)
    cv, _ = v.conv(K1, x, rng, n_inner)
    cu, _ = u.conv(K2, x, rng, n_inner)
    with np.errstate(divide="ignore", invalid="ignore"):
        vp = np.where(vv > 0, np.abs(vv) ** (p - 1.0), 0.0)
        up = np.where(uv > 0, np.abs(uv) ** (p - 1.0), 0.0)
    nl_u = _pot(K1, x) * cv * vp
    nl_v = _pot(K2, x) * cu * up
    lu, lv = u.neg_lap(x), v.neg_lap(x)
    scale = np.maximum.reduce([np.abs(lu), np.abs(lv), np.abs(nl_u), np.abs(nl_v)])
    return lu - nl_u, lv - nl_v, scale


# ---------------------------------------------------------------------------
# Monte Carlo driver


@dataclass
class PohozaevResult:
    value: float
    std_error: float
    samples: int
    magnitude: float   # Monte Carlo estimate of the integral of |individual terms|

    def __iter__(self):
        yield self.value
        yield self.std_error

    def is_zero(self, nsigma: float = 3.0) -> bool:
        """|value| <= nsigma * std_error, with a round-off floor relative to the term magnitude."""
        return abs(self.value) <= nsigma * self.std_error + ROUNDOFF_FLOOR * self.magnitude

    def to_dict(self):
        return {"value": self.value, "std_error": self.std_error, "samples": self.samples,
                "magnitude": self.magnitude}


def _integrate(integrand, u, v, mc: MonteCarloSpec, domain: PohozaevDomain | None, n_inner: int,
               box_weight: float = 0.5):
    """Mixture importance sampling: uniform on the box around D_rho plus bubble
    components at the field anchors.  With domain=None the integral is over R^N
    and only the bubble components are used."""
    anchors = np.concatenate([u.anchors, v.anchors])
    scale = min(u.scale, v.scale)
    bub = BubbleMixture(anchors, scale, tail=1.0)
    if domain is not None:
        lo, hi = domain.bounding_box()
        log_box = -float(np.sum(np.log(hi - lo)))
        wb = box_weight
    else:
        wb = 0.0
    st = RunningStats()
    mag = RunningStats()
    done, k = 0, 0
    while done < mc.sample_count:
        n = min(mc.block_size, mc.sample_count - done)
        rng = block_generator(mc.seed, k)
        if wb > 0:
            pick = rng.random(n) < wb
            x = bub.sample(rng, n)
            nb = int(pick.sum())
            x[pick] = lo + (hi - lo) * rng.random((nb, lo.size))
            lb = bub.logpdf(x)
            inside_box = np.all((x >= lo) & (x <= hi), axis=-1)
            q = (1.0 - wb) * np.exp(lb) + wb * np.where(inside_box, math.exp(log_box), 0.0)
        else:
            x = bub.sample(rng, n)
            q = np.exp(bub.logpdf(x))
        vals = np.zeros(n)
        mags = np.zeros(n)
        sel = np.ones(n, bool) if domain is None else domain.contains(x)
        if np.any(sel):
            f, fm = integrand(x[sel], rng, n_inner)
            vals[sel] = f / q[sel]
            mags[sel] = fm / q[sel]
        st = st.merge(RunningStats.from_samples(vals))
        mag = mag.merge(RunningStats.from_samples(mags))
        done += n
        k += 1
    return PohozaevResult(float(st.mean), float(st.std_error), mc.sample_count, float(mag.mean))


def pohozaev_dilation_residual(u, v, K1, K2, dom: PohozaevDomain, mc: MonteCarloSpec, n_inner: int = 64):
    """int_{D_rho} R_u <x, grad v> + R_v <x, grad u>."""
    def g(x, rng, ni):
        Ru, Rv, sc = _residuals(u, v, K1, K2, x, rng, ni)
        xv = np.sum(x * v.grad(x), axis=-1)
        xu = np.sum(x * u.grad(x), axis=-1)
        return Ru * xv + Rv * xu, sc * (np.abs(xv) + np.abs(xu))
    return _integrate(g, u, v, mc, dom, n_inner)


def pohozaev_translation_residual(u, v, K1, K2, dom: PohozaevDomain, i: int, mc: MonteCarloSpec,
                                  n_inner: int = 64):
    """int_{D_rho} R_u d_i v + R_v d_i u for a coordinate i in 3..N (1-based)."""
    N = u.params.N
    if not 3 <= i <= N:
        raise DomainError(f"translation index must be in 3..{N}")

    def g(x, rng, ni):
        Ru, Rv, sc = _residuals(u, v, K1, K2, x, rng, ni)
        dv = v.grad(x)[..., i - 1]
        du = u.grad(x)[..., i - 1]
        return Ru * dv + Rv * du, sc * (np.abs(dv) + np.abs(du))
    return _integrate(g, u, v, mc, dom, n_inner)


def pohozaev_scaling_residual(u, v, cfg: PolygonConfig, cutoff: CutoffSpec | None, K1, K2,
                              mc: MonteCarloSpec, n_inner: int = 64):
    """int_{R^N} R_u dY/dlambda + R_v dZ/dlambda with the ansatz of (cfg, cutoff)."""
    def dlam(x):
        return sum(derivative_basis_eval(cfg, cutoff, j, 1, x) for j in range(1, cfg.m + 1))

    def g(x, rng, ni):
        Ru, Rv, sc = _residuals(u, v, K1, K2, x, rng, ni)
        d = dlam(x)
        return (Ru + Rv) * d, 2.0 * sc * np.abs(d)
    return _integrate(g, u, v, mc, None, n_inner)


# ---------------------------------------------------------------------------
# rearranged identity: two deterministic paths


@dataclass(frozen=True)
class RadialBump:
    """w(x) = amp * exp(1 - 1/(1 - (|x-c|/R)^2)) for |x-c| < R, else 0."""

    center: np.ndarray
    radius: float
    amp: float = 1.0

    def profile(self, s):
        s = np.asarray(s, dtype=float)
        t = np.clip(s / self.radius, 0.0, 1.0)
        inside = t < 1.0
        q = np.where(inside, 1.0 - t * t, 1.0)
        return np.where(inside, self.amp * np.exp(1.0 - 1.0 / q), 0.0)

    def dprofile(self, s):
        s = np.asarray(s, dtype=float)
        t = np.clip(s / self.radius, 0.0, 1.0)
        inside = t < 1.0
        q = np.where(inside, 1.0 - t * t, 1.0)
        return np.where(inside, self.profile(s) * (-2.0 * t / q ** 2) / self.radius, 0.0)

    def d2profile(self, s):
        s = np.asarray(s, dtype=float)
        t = np.clip(s / self.radius, 0.0, 1.0)
        inside = t < 1.0
        q = np.where(inside, 1.0 - t * t, 1.0)
        a = -2.0 * t / q ** 2                   # d log w / dt
        da = -2.0 / q ** 2 - 8.0 * t * t / q ** 3
        return np.where(inside, self.profile(s) * (a * a + da) / self.radius ** 2, 0.0)


def _radial_profile(K):
    if callable(K):
        return K
    c = float(K)
    return lambda s: np.full(np.shape(s), c)


def identity_check_d12(u: RadialBump, v: RadialBump, K1, K2, dom: PohozaevDomain, params: SystemParams,
                       nodes: int = 96, conv_nodes: int = 24, tol: float = 1e-11, blocks: bool = False):
    """(lhs, rhs) of the dilation identity for bumps supported inside D_rho.

    Fields and potentials are radial about a common point c, with K given as a
    constant or a radial profile k(|x - c|).  For such data the terms carrying
    the constant vector c are odd and integrate to zero, so the multiplier x can
    be replaced by x - c and every integral becomes one-dimensional.

    lhs: int (-Delta u) s v' + (-Delta v) s u' - sum K conv(K w^p) w^(p-1) s w'
    rhs: -(N-2) int u' v' + (1/p) sum [int s k'(s) conv(K w^p) w^p
         + N int K conv(K w^p) w^p + int K s d/ds conv(K w^p) w^p],
    where the last term is the kernel form -(N-alpha) int int x.(x-y)|x-y|^(-(N-alpha)-2) ...
    evaluated as s d/ds of the radial convolution.  `nodes` Gauss-Legendre
    nodes per piece serve the gradient block, `conv_nodes` the convolution block.
    """
    N = params.N
    p = params.two_star_alpha
    mu = params.mu
    for w in (u, v):
        c = np.asarray(w.center, dtype=float)
        rr = np.linalg.norm(c[:2])
        if abs(rr - dom.r0) + np.linalg.norm(c[2:] - np.asarray(dom.x0_pp)) + w.radius > dom.rho / 2 + 1e-12:
            raise DomainError("bump support must lie in the half-size domain D_(rho/2)")
    if not np.allclose(u.center, v.center):
        raise DomainError("u and v must share their center")
    R = max(u.radius, v.radius)
    edges = sorted({0.0, u.radius, v.radius})

    def rule(n):
        xg, wg = gauss_legendre(n)
        S, W = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            S.append(0.5 * (b - a) * xg + 0.5 * (a + b))
            W.append(0.5 * (b - a) * wg)
        s = np.concatenate(S)
        return s, np.concatenate(W) * sphere_surface_area(N) * s ** (N - 1)

    def conv_of(K, w, r):
        k = _radial_profile(K)
        return radial_convolution(mu, lambda t: k(t) * w.profile(t) ** p, abs(float(r)), N, tol=tol,
                                  breaks=(w.radius,))

    def conv_and_derivative(K, w, s):
        # the convolution of a radial field is even in r
        c0 = np.array([conv_of(K, w, r) for r in s])
        h = 1e-3 * R
        d = np.array([(-conv_of(K, w, r + 2 * h) + 8 * conv_of(K, w, r + h) - 8 * conv_of(K, w, r - h)
                       + conv_of(K, w, r - 2 * h)) / (12 * h) for r in s])
        return c0, d

    def neg_lap(w, s):
        return -(w.d2profile(s) + (N - 1) / s * w.dprofile(s))

    # gradient block
    s, wq = rule(nodes)
    lhs_grad = float(np.dot(wq, neg_lap(u, s) * s * v.dprofile(s) + neg_lap(v, s) * s * u.dprofile(s)))
    rhs_grad = -(N - 2) * float(np.dot(wq, u.dprofile(s) * v.dprofile(s)))

    # convolution blocks, one per equation; identical data is evaluated once
    s, wq = rule(conv_nodes)
    cache = {}
    lhs_conv, rhs_dk, rhs_N, rhs_kernel = 0.0, 0.0, 0.0, 0.0
    for K, w in ((K1, v), (K2, u)):
        key = (id(K) if callable(K) else float(K), id(w))
        if key not in cache:
            k = _radial_profile(K)
            kv = k(s)
            if callable(K):
                hk = 1e-5 * R
                dk = (k(s + hk) - k(s - hk)) / (2 * hk)
            else:
                dk = np.zeros_like(s)
            c0, dc = conv_and_derivative(K, w, s)
            wv = w.profile(s)
            wp = wv ** p
            with np.errstate(divide="ignore", invalid="ignore"):
                wp1 = np.where(wv > 0, wv ** (p - 1.0), 0.0)
            cache[key] = (-float(np.dot(wq, kv * c0 * wp1 * s * w.dprofile(s))),
                          float(np.dot(wq, s * dk * c0 * wp)) / p,
                          N * float(np.dot(wq, kv * c0 * wp)) / p,
                          float(np.dot(wq, kv * s * dc * wp)) / p)
        a, b, c, d = cache[key]
        lhs_conv += a
        rhs_dk += b
        rhs_N += c
        rhs_kernel += d
    lhs = lhs_grad + lhs_conv
    rhs = rhs_grad + rhs_dk + rhs_N + rhs_kernel
    if blocks:
        return {"lhs_grad": lhs_grad, "lhs_conv": lhs_conv, "rhs_grad": rhs_grad,
                "rhs_conv": rhs_dk + rhs_N + rhs_kernel, "lhs": lhs, "rhs": rhs}
    return lhs, rhs
