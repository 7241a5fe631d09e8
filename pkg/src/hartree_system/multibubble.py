"""Polygonal m-bubble ansatz, its cutoff, weighted sup-norms and numeric probes.

Centers sit on a circle of radius r_bar in the (x1, x2) plane, shifted by
x_bar'' in the remaining N-2 coordinates.  The cutoff depends on the distance
of (|x'|, x'') to (r0, x0'') and switches from 1 to 0 across (delta, 2 delta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .bubble import Bubble, bubble_dlambda, bubble_eval, bubble_gradient, bubble_laplacian, riesz_convolution_bubble
from .params_special import DomainError, SystemParams
from .quadrature import MonteCarloSpec, block_generator, radial_convolution, riesz_convolution_mc


@dataclass(frozen=True)
class PolygonConfig:
    m: int
    r_bar: float
    x_bar_pp: tuple
    lam: float
    params: SystemParams
    window_regime: bool = False
    L0: float = 0.5
    L1: float = 2.0

    def __post_init__(self):
        N = self.params.N
        if self.m < 1:
            raise DomainError("m must be >= 1")
        if not self.r_bar > 0 or not self.lam > 0:
            raise DomainError("r_bar and lambda must be positive")
        xpp = tuple(float(v) for v in self.x_bar_pp)
        if len(xpp) != N - 2:
            raise DomainError(f"x_bar_pp must have {N - 2} entries")
        object.__setattr__(self, "x_bar_pp", xpp)
        if self.window_regime:
            lo, hi = self.window()
            if not lo <= self.lam <= hi:
                raise DomainError(f"lambda = {self.lam} outside the window [{lo:.6g}, {hi:.6g}]")

    def window(self):
        e = (self.params.N - 2) / (self.params.N - 4)
        return self.L0 * self.m ** e, self.L1 * self.m ** e

    def with_(self, **kw):
        d = dict(m=self.m, r_bar=self.r_bar, x_bar_pp=self.x_bar_pp, lam=self.lam, params=self.params,
                 window_regime=self.window_regime, L0=self.L0, L1=self.L1)
        d.update(kw)
        return PolygonConfig(**d)


def polygon_centers(cfg: PolygonConfig) -> np.ndarray:
    """z_j = (r cos(2(j-1)pi/m), r sin(2(j-1)pi/m), x''), shape (m, N)."""
    th = 2.0 * math.pi * np.arange(cfg.m) / cfg.m
    z = np.empty((cfg.m, cfg.params.N))
    z[:, 0] = cfg.r_bar * np.cos(th)
    z[:, 1] = cfg.r_bar * np.sin(th)
    z[:, 2:] = np.asarray(cfg.x_bar_pp)
    return z


def interaction_sum(cfg: PolygonConfig, p: float) -> float:
    """sum_(j=2..m) (2 r sin((j-1) pi/m))^(-p); zero for m = 1."""
    if cfg.m < 2:
        return 0.0
    j = np.arange(1, cfg.m)
    return float(np.sum((2.0 * cfg.r_bar * np.sin(j * math.pi / cfg.m)) ** (-p)))


def bubbles(cfg: PolygonConfig):
    return [Bubble(cfg.params, z, cfg.lam) for z in polygon_centers(cfg)]


# ---------------------------------------------------------------------------
# cutoff


def _smoothstep(s):
    """Smooth 1 -> 0 transition on s in (0,1) and its first two derivatives.

    xi(s) = f(1-s)/(f(1-s)+f(s)) with f(t) = exp(-1/t), written as a logistic
    in g(s) = 1/(1-s) - 1/s so every derivative vanishes at both ends.
    """
    s = np.asarray(s, dtype=float)
    inside = (s > 0) & (s < 1)
    v = np.where(s <= 0, 1.0, 0.0)
    d1 = np.zeros_like(s)
    d2 = np.zeros_like(s)
    if np.any(inside):
        t = s[inside]
        g = 1.0 / (1.0 - t) - 1.0 / t
        g1 = 1.0 / t ** 2 + 1.0 / (1.0 - t) ** 2
        g2 = -2.0 / t ** 3 + 2.0 / (1.0 - t) ** 3
        sig = expit(-g)
        ss = sig * (1.0 - sig)
        v[inside] = sig
        d1[inside] = -ss * g1
        d2[inside] = -ss * g2 + (1.0 - 2.0 * sig) * ss * g1 * g1
    return v, d1, d2


@dataclass(frozen=True)
class CutoffSpec:
    r0: float
    x0_pp: tuple
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError("delta must be positive")
        object.__setattr__(self, "x0_pp", tuple(float(v) for v in self.x0_pp))

    def coords(self, x):
        x = np.asarray(x, dtype=float)
        rho = np.linalg.norm(x[..., :2], axis=-1)
        w_r = rho - self.r0
        w_pp = x[..., 2:] - np.asarray(self.x0_pp)
        d = np.sqrt(w_r ** 2 + np.sum(w_pp ** 2, axis=-1))
        return rho, w_r, w_pp, d

    def distance(self, x):
        return self.coords(x)[3]


def cutoff_eval(spec: CutoffSpec | None, x):
    if spec is None:
        return np.ones(np.shape(x)[:-1])
    return _smoothstep(spec.distance(x) / spec.delta - 1.0)[0]


def cutoff_derivatives(spec: CutoffSpec | None, x):
    """(xi, grad xi, Delta xi) at x."""
    x = np.asarray(x, dtype=float)
    if spec is None:
        sh = x.shape[:-1]
        return np.ones(sh), np.zeros(x.shape), np.zeros(sh)
    N = x.shape[-1]
    rho, w_r, w_pp, d = spec.coords(x)
    v, d1, d2 = _smoothstep(d / spec.delta - 1.0)
    d1 = d1 / spec.delta
    d2 = d2 / spec.delta ** 2
    band = d1 != 0
    safe_d = np.where(band, d, 1.0)
    safe_rho = np.where(band & (rho > 0), rho, 1.0)
    grad = np.zeros(x.shape)
    grad[..., :2] = (d1 * w_r / (safe_d * safe_rho))[..., None] * x[..., :2]
    grad[..., 2:] = (d1 / safe_d)[..., None] * w_pp
    lap_d = (N - 2) / safe_d + w_r / (safe_rho * safe_d)
    lap = np.where(band, d2 + d1 * lap_d, 0.0)
    return v, grad, lap


# ---------------------------------------------------------------------------
# ansatz


def ansatz_parts(cfg: PolygonConfig, cutoff: CutoffSpec | None, x):
    """Z*, grad Z*, -Delta Z*, the per-bubble values and the cutoff data at x."""
    x = np.asarray(x, dtype=float)
    bs = bubbles(cfg)
    vals = np.stack([bubble_eval(b, x) for b in bs])
    zs = vals.sum(axis=0)
    gzs = sum(bubble_gradient(b, x) for b in bs)
    lzs = sum(bubble_laplacian(b, x) for b in bs)
    xi, gxi, lxi = cutoff_derivatives(cutoff, x)
    return {"vals": vals, "Zs": zs, "gradZs": gzs, "negLapZs": lzs, "xi": xi, "gradxi": gxi, "lapxi": lxi}


def ansatz_eval(cfg: PolygonConfig, cutoff: CutoffSpec | None, which: str, x):
    """Z = xi sum_j U_j, Z* = sum_j U_j; Y, Y* coincide with Z, Z* (synchronised)."""
    if which not in ("Z", "Y", "Z_star", "Y_star"):
        raise DomainError(f"unknown field {which!r}")
    x = np.asarray(x, dtype=float)
    zs = sum(bubble_eval(b, x) for b in bubbles(cfg))
    if which.endswith("star"):
        return zs
    return cutoff_eval(cutoff, x) * zs


def ansatz_neg_laplacian(cfg, cutoff, x):
    """-Delta Z = xi (-Delta Z*) - Z* Delta xi - 2 grad xi . grad Z*."""
    a = ansatz_parts(cfg, cutoff, x)
    return a["xi"] * a["negLapZs"] - a["Zs"] * a["lapxi"] - 2.0 * np.sum(a["gradxi"] * a["gradZs"], axis=-1)


def derivative_basis_eval(cfg: PolygonConfig, cutoff: CutoffSpec | None, j: int, l: int, x):
    """d/d(parameter) of xi U_(z_j, lambda): l = 1 lambda, l = 2 r_bar, l = k >= 3 the k-th coordinate of x''."""
    N = cfg.params.N
    if not 1 <= j <= cfg.m or not 1 <= l <= N:
        raise DomainError("invalid (j, l)")
    x = np.asarray(x, dtype=float)
    b = bubbles(cfg)[j - 1]
    xi = cutoff_eval(cutoff, x)
    if l == 1:
        return xi * bubble_dlambda(b, x)
    g = bubble_gradient(b, x)
    if l == 2:
        th = 2.0 * math.pi * (j - 1) / cfg.m
        return -xi * (g[..., 0] * math.cos(th) + g[..., 1] * math.sin(th))
    return -xi * g[..., l - 1]


# ---------------------------------------------------------------------------
# weighted norms


@dataclass(frozen=True)
class WeightedNormSpec:
    sample_set: np.ndarray
    eta_bar: float = 0.05

    def __post_init__(self):
        if not self.eta_bar > 0:
            raise DomainError("eta_bar must be positive")
        object.__setattr__(self, "sample_set", np.atleast_2d(np.asarray(self.sample_set, dtype=float)))

    @property
    def tau(self):
        return 1.0 + self.eta_bar


def norm_weight(kind: str, cfg: PolygonConfig, x, tau: float):
    """lambda^(+-) sum_j (1 + lambda |x - z_j|)^(-sigma) for the two norms."""
    N = cfg.params.N
    if kind == "star":
        sig, pre = (N - 2) / 2.0 + tau, (N - 2) / 2.0
    elif kind == "starstar":
        sig, pre = (N + 2) / 2.0 + tau, (N + 2) / 2.0
    else:
        raise DomainError("kind must be 'star' or 'starstar'")
    z = polygon_centers(cfg)
    dist = np.linalg.norm(np.asarray(x)[..., None, :] - z, axis=-1)
    return cfg.lam ** pre * np.sum((1.0 + cfg.lam * dist) ** (-sig), axis=-1)


def weighted_norm(kind: str, field, cfg: PolygonConfig, spec: WeightedNormSpec) -> float:
    """Sup over the sample set of |field| / weight: a lower bound on the true norm."""
    pts = spec.sample_set
    if pts.shape[0] == 0:
        raise DomainError("empty sample set")
    vals = np.asarray(field(pts) if callable(field) else field, dtype=float)
    return float(np.max(np.abs(vals) / norm_weight(kind, cfg, pts, spec.tau)))


def structured_samples(cfg: PolygonConfig, cutoff: CutoffSpec | None, n_random: int = 64, seed: int = 0):
    """Peaks, near-peak shells, midpoints of adjacent peaks, cutoff band and random fill."""
    N = cfg.params.N
    rng = block_generator(seed, 0)
    z = polygon_centers(cfg)
    pts = [z]
    for k in (0.5, 1.0, 2.0, 4.0, 8.0):
        for e in range(N):
            for sgn in (-1.0, 1.0):
                off = np.zeros(N)
                off[e] = sgn * k / cfg.lam
                pts.append(z[:1] + off)
    if cfg.m > 1:
        pts.append(0.5 * (z + np.roll(z, -1, axis=0)))
    if cutoff is not None:
        dlt = cutoff.delta
        for frac in (1.1, 1.3, 1.5, 1.7, 1.9):
            for ang in np.linspace(0, 2 * math.pi, 12, endpoint=False):
                w = np.zeros(N - 1)
                w[0] = math.cos(ang)
                w[1 % (N - 1)] += math.sin(ang) if N - 1 > 1 else 0.0
                w = frac * dlt * w / np.linalg.norm(w)
                rad = cutoff.r0 + w[0]
                x = np.concatenate([[rad, 0.0], np.asarray(cutoff.x0_pp) + w[1:]])
                pts.append(x[None, :])
        span = 2.0 * dlt
    else:
        span = 4.0 / cfg.lam
    if n_random:
        idx = rng.integers(0, cfg.m, n_random)
        dirs = rng.standard_normal((n_random, N))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        rad = span * rng.random(n_random) ** 2
        pts.append(z[idx] + rad[:, None] * dirs)
    return np.concatenate(pts)


# ---------------------------------------------------------------------------
# error term l_m


def _pot(K, y):
    if callable(K):
        return np.asarray(K(y), dtype=float)
    return np.full(np.shape(y)[:-1], float(K))


def lm_components(cfg: PolygonConfig, cutoff: CutoffSpec | None, K, x, mc: MonteCarloSpec, block: int = 0):
    """l_m at x for one equation with potential K; returns (values, std_errors).

    l = K (|.|^(-(N-alpha)) * K Y^p) Y^(p-1) - (-Delta Z).  The convolution is
    split into sum_j (closed form of V_j^p) plus a Monte Carlo estimate of the
    remainder K Y^p - sum_j V_j^p.
    """
    params = cfg.params
    p = params.two_star_alpha
    mu = params.mu
    x = np.atleast_2d(np.asarray(x, dtype=float))
    bs = bubbles(cfg)
    z = polygon_centers(cfg)
    a = ansatz_parts(cfg, cutoff, x)
    Y = a["xi"] * a["Zs"]
    conv_exact = sum(riesz_convolution_bubble(mu, b, x) for b in bs)

    def remainder(y):
        v = np.stack([bubble_eval(b, y) for b in bs])
        xi = cutoff_eval(cutoff, y)
        return _pot(K, y) * (xi * v.sum(axis=0)) ** p - np.sum(v ** p, axis=0)

    if callable(K) or cfg.m > 1 or cutoff is not None:
        rng = block_generator(mc.seed, block)
        est, se = riesz_convolution_mc(remainder, x, mu, z, 1.0 / cfg.lam, mc.sample_count, rng,
                                       tail=params.alpha / 2.0)
    else:
        est = np.zeros(x.shape[0])
        se = np.zeros(x.shape[0])
    Kx = _pot(K, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        Yp1 = np.where(Y > 0, Y ** (p - 1.0), 0.0)
    negLapZ = a["xi"] * a["negLapZs"] - a["Zs"] * a["lapxi"] - 2.0 * np.sum(a["gradxi"] * a["gradZs"], axis=-1)
    val = Kx * (conv_exact + est) * Yp1 - negLapZ
    return val, np.abs(Kx * Yp1) * se


@dataclass
class LmProbeResult:
    norm_estimate: float
    per_point: list
    flagged: int = 0
    norm_components: tuple = ()


def residual_lm_probe(cfg: PolygonConfig, cutoff: CutoffSpec | None, K1, K2,
                      norm_spec: WeightedNormSpec, mc: MonteCarloSpec, rel_tol: float = 0.1):
    """starstar-norm estimate of (l_m1, l_m2) over the sample set.

    per_point rows are (x, l_m1, se1, l_m2, se2).  Points whose Monte Carlo
    error exceeds rel_tol of the value (and of the norm scale) are counted in
    `flagged`.
    """
    pts = norm_spec.sample_set
    v1, s1 = lm_components(cfg, cutoff, K1, pts, mc, block=1)
    if K2 is K1 or (not callable(K1) and not callable(K2) and float(K1) == float(K2)):
        v2, s2 = v1, s1
    else:
        v2, s2 = lm_components(cfg, cutoff, K2, pts, mc, block=2)
    w = norm_weight("starstar", cfg, pts, norm_spec.tau)
    n1 = float(np.max(np.abs(v1) / w))
    n2 = float(np.max(np.abs(v2) / w))
    scale = max(n1, n2)
    flagged = int(np.sum((s1 / w > rel_tol * np.maximum(np.abs(v1) / w, 1e-3 * scale))
                         | (s2 / w > rel_tol * np.maximum(np.abs(v2) / w, 1e-3 * scale))))
    rows = [(pts[i].tolist(), float(v1[i]), float(s1[i]), float(v2[i]), float(s2[i])) for i in range(pts.shape[0])]
    return LmProbeResult(n1 + n2, rows, flagged, (n1, n2))


# ---------------------------------------------------------------------------
# interaction-estimate probes


@dataclass
class ProbeResult:
    max_ratio: float
    samples: list
    info: dict = field(default_factory=dict)

    def __iter__(self):
        yield self.max_ratio
        yield self.samples


def _b2_ratio(x, zk, zj, a, b, dl):
    dk = np.linalg.norm(x - zk, axis=-1)
    dj = np.linalg.norm(x - zj, axis=-1)
    lhs = (1.0 + dj) ** (-a) * (1.0 + dk) ** (-b)
    e = a + b - dl
    rhs = np.linalg.norm(zk - zj) ** (-dl) * ((1.0 + dk) ** (-e) + (1.0 + dj) ** (-e))
    return lhs / rhs


def estimate_probe(which: str, inputs: dict, sample_count: int = 2000, seed: int = 0) -> ProbeResult:
    """Empirical sup of LHS/RHS (constant stripped) for the interaction estimates.

    B2: pointwise product of two decay profiles against the split bound;
    B3: Newtonian potential of (1+|y|)^(-2-delta) against (1+|x|)^(-delta);
    B4: Riesz potential of a scaled decay profile against lambda^(a/2)(1+lambda|x|)^(-min(a,eta)).
    """
    rng = block_generator(seed, 7)
    if which == "B2":
        a, b, dl = inputs["alpha"], inputs["beta"], inputs["delta"]
        if not (a >= 1 and b >= 1 and 0 < dl <= min(a, b)):
            raise DomainError("B2 needs alpha, beta >= 1 and 0 < delta <= min(alpha, beta)")
        zk = np.asarray(inputs["z_k"], float)
        zj = np.asarray(inputs["z_j"], float)
        N = zk.size
        sep = np.linalg.norm(zk - zj)
        # half the samples on the segment tube, half with heavy-tailed radii about either center
        n1 = sample_count // 2
        t = rng.random(n1)
        tube = zj + t[:, None] * (zk - zj) + 0.1 * sep * rng.standard_normal((n1, N)) * rng.random((n1, 1))
        n2 = sample_count - n1
        c = np.where(rng.random(n2)[:, None] < 0.5, zk, zj)
        dirs = rng.standard_normal((n2, N))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        rad = sep * np.exp(rng.uniform(-6, 6, n2))
        far = c + rad[:, None] * dirs
        x = np.concatenate([tube, far])
        r = _b2_ratio(x, zk, zj, a, b, dl)
        return ProbeResult(float(r.max()), r.tolist(), {"argmax": x[int(r.argmax())].tolist()})
    if which == "B3":
        N, dl = int(inputs["N"]), float(inputs["delta"])
        if not 0 < dl < N - 2:
            raise DomainError("B3 needs 0 < delta < N - 2")
        rmax = float(inputs.get("r_max", 1e3))
        radii = np.concatenate([[0.0], np.geomspace(1e-2, rmax, sample_count - 1)])
        f = lambda s: (1.0 + s) ** (-2.0 - dl)
        lhs = np.array([radial_convolution(N - 2.0, f, r, N, tol=1e-9) for r in radii])
        ratio = lhs * (1.0 + radii) ** dl
        return ProbeResult(float(ratio.max()), ratio.tolist(), {"radii": radii.tolist()})
    if which == "B4":
        N = int(inputs["N"])
        ka = float(inputs["kernel_exp"])
        eta = float(inputs["eta"])
        lam = float(inputs.get("lam", 1.0))
        if not eta > 0 or not 0 < ka < N:
            raise DomainError("B4 needs eta > 0 and 0 < kernel_exp < N")
        rmax = float(inputs.get("r_max", 1e4)) / lam
        radii = np.concatenate([[0.0], np.geomspace(1e-2 / lam, rmax, sample_count - 1)])
        f = lambda s: lam ** (N - ka / 2.0) * (1.0 + lam * s) ** (-(N - ka + eta))
        lhs = np.array([radial_convolution(ka, f, r, N, tol=1e-9) for r in radii])
        m = min(ka, eta)
        ratio = lhs / (lam ** (ka / 2.0) * (1.0 + lam * radii) ** (-m))
        big = radii * lam >= float(inputs.get("fit_from", 1e2))
        slope = np.polyfit(np.log1p(lam * radii[big]), np.log(lhs[big]), 1)[0] if big.sum() >= 2 else float("nan")
        return ProbeResult(float(ratio.max()), ratio.tolist(),
                           {"radii": radii.tolist(), "decay_exponent": float(-slope), "predicted": m})
    raise DomainError(f"unknown probe {which!r}")
