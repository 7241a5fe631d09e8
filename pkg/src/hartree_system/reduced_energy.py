"""Finite-dimensional reduced problem: potentials, balance constants and the root solve.

The reduced equations are written in the canonical form

    grad_(r, x'') (K1 + K2) = 0,     G(t) = -B_dil / t^3 + B_int / t^(N-1) = 0,

with lambda = t m^((N-2)/(N-4)).  B_dil comes from the curvature of K at the
critical point, B_int from the pairwise bubble interaction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from .bubble import Bubble, bubble_eval, bubble_gradient, bubble_laplacian, riesz_convolution_bubble
from .multibubble import (CutoffSpec, PolygonConfig, bubbles, cutoff_derivatives, cutoff_eval,
                          polygon_centers)
from .params_special import DomainError, SystemParams, gamma_fn, sphere_surface_area
from .quadrature import (AccuracyError, BubbleMixture, MonteCarloSpec, RunningStats, block_generator,
                         radial_integral, riesz_convolution_mc)

K_FLOOR = 1e-6


class NoAdmissibleConfiguration(DomainError):
    """No sign change of the balance function inside the admissible box."""


class SignDiagnostic(DomainError):
    """A constant that must be positive came out non-positive."""


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class PotentialPair:
    """K_i(r, x'') = 1 + q_i(w, w)/2 + c_i |w|^4, w = (r - r0, x'' - x0''), floored at 1e-6."""

    r0: float
    x0_pp: tuple
    q1: np.ndarray
    q2: np.ndarray
    quartic1: float = 0.0
    quartic2: float = 0.0
    delta: float = 0.1

    def __post_init__(self):
        n = len(self.x0_pp) + 1
        for name in ("q1", "q2"):
            q = np.asarray(getattr(self, name), dtype=float)
            if q.shape != (n, n):
                raise DomainError(f"{name} must be {n}x{n}")
            if not np.allclose(q, q.T):
                raise DomainError(f"{name} must be symmetric")
            object.__setattr__(self, name, q)
        if not self.r0 > 0 or not self.delta > 0:
            raise DomainError("r0 and delta must be positive")
        object.__setattr__(self, "x0_pp", tuple(float(v) for v in self.x0_pp))

    @property
    def N(self):
        return len(self.x0_pp) + 2

    def _qc(self, i):
        return (self.q1, self.quartic1) if i == 1 else (self.q2, self.quartic2)

    def offsets(self, x):
        """w = (|x'| - r0, x'' - x0'') for points x in R^N."""
        x = np.asarray(x, dtype=float)
        rho = np.linalg.norm(x[..., :2], axis=-1)
        return np.concatenate([(rho - self.r0)[..., None], x[..., 2:] - np.asarray(self.x0_pp)], axis=-1)

    def value_w(self, i, w):
        q, c = self._qc(i)
        w = np.asarray(w, dtype=float)
        n2 = np.sum(w * w, axis=-1)
        return np.maximum(1.0 + 0.5 * np.einsum("...i,ij,...j->...", w, q, w) + c * n2 * n2, K_FLOOR)

    def grad_w(self, i, w):
        q, c = self._qc(i)
        w = np.asarray(w, dtype=float)
        n2 = np.sum(w * w, axis=-1, keepdims=True)
        g = w @ q + 4.0 * c * n2 * w
        raw = 1.0 + 0.5 * np.einsum("...i,ij,...j->...", w, q, w) + c * n2[..., 0] ** 2
        return np.where((raw > K_FLOOR)[..., None], g, 0.0)

    def hess_w(self, i, w):
        q, c = self._qc(i)
        w = np.asarray(w, dtype=float)
        return q + 4.0 * c * (np.dot(w, w) * np.eye(w.size) + 2.0 * np.outer(w, w))

    def K(self, i):
        """K_i as a function on points of R^N."""
        return lambda x: self.value_w(i, self.offsets(x))

    def grad_x(self, i, x):
        """Gradient of K_i with respect to x in R^N."""
        x = np.asarray(x, dtype=float)
        gw = self.grad_w(i, self.offsets(x))
        rho = np.linalg.norm(x[..., :2], axis=-1, keepdims=True)
        out = np.empty(x.shape)
        out[..., :2] = gw[..., :1] * x[..., :2] / np.where(rho > 0, rho, 1.0)
        out[..., 2:] = gw[..., 1:]
        return out

    def laplacian_at_critical(self, i):
        return float(np.trace(self._qc(i)[0]))

    @classmethod
    def from_config(cls, cfg: dict):
        return cls(r0=cfg["r0"], x0_pp=tuple(cfg["x0pp"]), q1=np.asarray(cfg["q1"], float),
                   q2=np.asarray(cfg["q2"], float), quartic1=cfg.get("quartic1", 0.0),
                   quartic2=cfg.get("quartic2", 0.0), delta=cfg["delta"])


def _min_on_ball(q, c, R):
    # min over |w| <= R of 1 + q(w,w)/2 + c|w|^4; the quartic is isotropic so the
    # minimum runs along the lowest eigenvector: 1 + lmin t/2 + c t^2, t in [0, R^2]
    lmin = float(np.linalg.eigvalsh(q)[0])
    cands = [0.0, R * R]
    if c > 0:
        t = -lmin / (4.0 * c)
        if 0 < t < R * R:
            cands.append(t)
    return min(1.0 + 0.5 * lmin * t + c * t * t for t in cands)


def potential_checks(p: PotentialPair) -> dict:
    """Conditions at the common critical point, with named diagnostics."""
    w0 = np.zeros(p.N - 1)
    diag = []
    g = p.grad_w(1, w0) + p.grad_w(2, w0)
    grad_ok = bool(np.max(np.abs(g)) < 1e-12)
    if not grad_ok:
        diag.append("gradient of K1+K2 does not vanish at the critical point")
    laps = (p.laplacian_at_critical(1), p.laplacian_at_critical(2))
    cond2 = all(l < 0 for l in laps)
    if not cond2:
        diag.append(f"Laplacian condition violated: Delta K = {laps}")
    H = p.hess_w(1, w0) + p.hess_w(2, w0)
    det = float(np.linalg.det(H))
    scale = float(np.max(np.abs(H))) ** H.shape[0] if np.any(H) else 0.0
    degree = 0 if abs(det) <= 1e-12 * max(scale, 1e-300) else int(np.sign(det))
    if degree == 0:
        diag.append("degenerate critical point")
    mins = (_min_on_ball(p.q1, p.quartic1, 10 * p.delta), _min_on_ball(p.q2, p.quartic2, 10 * p.delta))
    pos = all(mv > 0 for mv in mins)
    if not pos:
        diag.append(f"K not positive on the 10 delta ball (min values {mins})")
    if 10 * p.delta > p.r0:
        diag.append("10 delta ball crosses the symmetry axis")
    return {
        "gradient_vanishes": grad_ok,
        "laplacians": laps,
        "laplacian_condition": cond2,
        "hessian_det": det,
        "degree_proxy": degree,
        "positive_on_ball": pos,
        "min_on_ball": mins,
        "passed": not diag,
        "diagnostics": diag,
    }


# ---------------------------------------------------------------------------
# constants


def _bubble_energy_density_integral(params: SystemParams, power_r: int) -> float:
    """int |y|^power_r (|y|^(-(N-alpha)) * V^p) V^p dy by radial quadrature."""
    c = params.constants
    N = params.N
    pref = c.C_conv_system * c.C_N_alpha ** params.two_star_alpha
    return pref * radial_integral(lambda r: r ** power_r * (1.0 + r * r) ** (-N), N, tol=1e-12)


def A1_closed_form(params: SystemParams) -> float:
    c = params.constants
    N = params.N
    return c.C_conv_system * c.C_N_alpha ** params.two_star_alpha * math.pi ** (N / 2) * gamma_fn(N / 2) / gamma_fn(N)


def A2_closed_form(params: SystemParams) -> float:
    c = params.constants
    N = params.N
    beta = gamma_fn((N + 2) / 2) * gamma_fn((N - 2) / 2) / gamma_fn(N)
    return c.C_conv_system * c.C_N_alpha ** params.two_star_alpha * 0.5 * sphere_surface_area(N) * beta


def constant_B1_pair(params: SystemParams) -> float:
    """A1 = int (|y|^(-(N-alpha)) * V^p) V^p for the unit bubble (the base of B1 = B2)."""
    return _bubble_energy_density_integral(params, 0)


def constant_A2(params: SystemParams) -> float:
    return _bubble_energy_density_integral(params, 2)


def constant_B3(params: SystemParams, potentials: PotentialPair) -> float:
    """Dilation coefficient -Delta(K1+K2)(x0) A2 / (N p), from d/dlambda of the lambda^-2 term."""
    lap = potentials.laplacian_at_critical(1) + potentials.laplacian_at_critical(2)
    if lap >= 0:
        raise SignDiagnostic(f"Delta(K1+K2) = {lap} >= 0: dilation constant non-positive, balance has no root")
    return -lap * constant_A2(params) / (params.N * params.two_star_alpha)


def interaction_leading_order(params: SystemParams) -> float:
    """Leading-order pair interaction 2 N (N-2) C^2 pi^(N/2) / Gamma(N/2+1)."""
    N = params.N
    C = params.constants.C_N_alpha
    return 2.0 * N * (N - 2) * C * C * math.pi ** (N / 2) / gamma_fn(N / 2 + 1)


def two_bubble_interaction(params: SystemParams, sep: float, mc: MonteCarloSpec, n_inner: int = 8,
                           block: int = 0):
    """E(sep) = J(U1 + U2) - 2 J(U) for unit bubbles at distance sep; (value, std_error).

    Every term is an interaction-sized integral so no large cancellation occurs:
    E = 2 int (-Delta U1) U2 - (1/p)[2 D(U1^p, U2^p) + 2 D(U1^p + U2^p, R) + D(R, R)],
    R = (U1+U2)^p - U1^p - U2^p.
    """
    N = params.N
    p = params.two_star_alpha
    mu = params.mu
    z1 = np.zeros(N)
    z2 = np.zeros(N)
    z2[0] = sep
    b1, b2 = Bubble(params, z1), Bubble(params, z2)
    prop = BubbleMixture(np.stack([z1, z2]), 1.0, tail=1.0)
    st = RunningStats()
    done, k = 0, 0
    while done < mc.sample_count:
        n = min(mc.block_size, mc.sample_count - done)
        rng = block_generator(mc.seed, (block << 20) + k)
        x = prop.sample(rng, n)
        iw = np.exp(-prop.logpdf(x))
        u1, u2 = bubble_eval(b1, x), bubble_eval(b2, x)
        c1, c2 = riesz_convolution_bubble(mu, b1, x), riesz_convolution_bubble(mu, b2, x)
        R = (u1 + u2) ** p - u1 ** p - u2 ** p
        grad = 0.5 * (bubble_laplacian(b1, x) * u2 + bubble_laplacian(b2, x) * u1)
        cross = 0.5 * (c1 * u2 ** p + c2 * u1 ** p)
        convR, _ = riesz_convolution_mc(lambda y: (bubble_eval(b1, y) + bubble_eval(b2, y)) ** p
                                        - bubble_eval(b1, y) ** p - bubble_eval(b2, y) ** p,
                                        x, mu, np.stack([z1, z2]), 1.0, n_inner, rng, tail=params.alpha / 2)
        vals = 2.0 * grad - (1.0 / p) * (2.0 * cross + 2.0 * (c1 + c2) * R + R * convR)
        st = st.merge(RunningStats.from_samples(vals * iw))
        done += n
        k += 1
    return st.mean, st.std_error


@dataclass
class InteractionFit:
    separations: list
    energies: list
    std_errors: list
    exponent: float
    B_pair: float          # E(s) ~ -B_pair s^(-(N-2))
    B_pair_std: float
    B4_pair: float         # (N-2)/2 * B_pair
    leading_order: float


def constant_B4(params: SystemParams, separations=(16.0, 32.0, 64.0, 128.0),
                mc: MonteCarloSpec | None = None, exponent_tol: float = 0.1) -> InteractionFit:
    """Pair interaction coefficient by fitting two-bubble energies against s^(-(N-2))."""
    mc = mc or MonteCarloSpec(50_000, seed=11)
    N = params.N
    E, S = [], []
    for i, s in enumerate(separations):
        e, se = two_bubble_interaction(params, s, mc, block=i + 1)
        E.append(e)
        S.append(se)
    E = np.asarray(E)
    S = np.asarray(S)
    if np.any(E >= 0):
        raise AccuracyError("two-bubble interaction energy is not negative", estimate=E.tolist())
    ls = np.log(np.asarray(separations))
    slope, _ = np.polyfit(ls, np.log(-E), 1, w=np.abs(E) / S)
    # s^(N-2) |E(s)| = B + b/s + ...; weighted least squares for (B, b)
    sv = np.asarray(separations, dtype=float)
    c = -E * sv ** (N - 2)
    cs = S * sv ** (N - 2)
    A = np.stack([np.ones_like(sv), 1.0 / sv], axis=1) / cs[:, None]
    coef, *_ = np.linalg.lstsq(A, c / cs, rcond=None)
    cov = np.linalg.inv(A.T @ A)
    B = float(coef[0])
    Bs = float(math.sqrt(cov[0, 0]))
    fit = InteractionFit(list(map(float, separations)), E.tolist(), S.tolist(), float(-slope), B, Bs,
                         0.5 * (N - 2) * B, interaction_leading_order(params))
    if abs(fit.exponent - (N - 2)) > exponent_tol:
        raise AccuracyError(f"fitted separation exponent {fit.exponent:.3f} differs from {N - 2}", estimate=fit)
    return fit


def ring_interaction_factor(N: int, r0: float) -> float:
    """lim_m m^(-(N-2)) sum_(j>=2) |z_1 - z_j|^(-(N-2)) = 2 zeta(N-2)/(2 pi r0)^(N-2)."""
    return 2.0 * float(zeta(N - 2)) / (2.0 * math.pi * r0) ** (N - 2)


def balance_lambda(m: int, B3: float, B4: float, N: int) -> float:
    """Positive root of -B3/lambda^3 + B4 m^(N-2)/lambda^(N-1)."""
    if not (B3 > 0 and B4 > 0):
        raise DomainError("B3 and B4 must be positive")
    if N < 5:
        raise DomainError("N >= 5 required")
    return (B4 * m ** (N - 2) / B3) ** (1.0 / (N - 4))


def balance_lambda_bisect(m: int, B3: float, B4: float, N: int, tol: float = 1e-14) -> float:
    """Same root by bisection of lambda^(N-1) * balance = -B3 lambda^(N-4) + B4 m^(N-2)."""
    g = lambda lam: -B3 * lam ** (N - 4) + B4 * m ** (N - 2)
    lo, hi = 1e-300 ** (1.0 / (N - 4)), 1.0
    while g(hi) > 0:
        hi *= 2.0
    lo = hi / 2.0
    while g(lo) < 0:
        lo /= 2.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# model and solver


@dataclass
class ReducedEnergyModel:
    params: SystemParams
    potentials: PotentialPair
    B: dict = field(default_factory=dict)   # name -> (value, provenance)
    L0: float = 0.5
    L1: float = 2.0

    def __post_init__(self):
        for name, (v, _) in self.B.items():
            if not v > 0:
                raise SignDiagnostic(f"{name} = {v} is not positive")

    @property
    def B_dil(self):
        return self.B["B_dilation"][0]

    @property
    def B_int(self):
        return self.B["B_interaction"][0]

    def balance(self, t):
        N = self.params.N
        t = np.asarray(t, dtype=float)
        return -self.B_dil / t ** 3 + self.B_int / t ** (N - 1)

    def t_star(self):
        return (self.B_int / self.B_dil) ** (1.0 / (self.params.N - 4))

    def F(self, v):
        """(grad_w (K1+K2)(r - r0, x'' - x0''), G(t)) for v = (t, r, x'')."""
        p = self.potentials
        w = np.concatenate([[v[1] - p.r0], np.asarray(v[2:]) - np.asarray(p.x0_pp)])
        g = p.grad_w(1, w) + p.grad_w(2, w)
        return np.concatenate([[float(self.balance(v[0]))], g])

    @classmethod
    def build(cls, params: SystemParams, potentials: PotentialPair, L0=0.5, L1=2.0, B4_pair=None,
              mc: MonteCarloSpec | None = None):
        A1 = constant_B1_pair(params)
        p = params.two_star_alpha
        B = {"B1": (float(A1 / p), "quadrature"), "B2": (float(A1 / p), "quadrature"),
             "B_dilation": (float(constant_B3(params, potentials)), "quadrature")}
        if B4_pair is None:
            fit = constant_B4(params, mc=mc)
            B4_pair, prov = fit.B4_pair, "quadrature-fit"
        else:
            prov = "user-supplied"
        ring = ring_interaction_factor(params.N, potentials.r0)
        B["B4_pair"] = (float(B4_pair), prov)
        B["B_interaction"] = (float(B4_pair) * ring, prov)
        B["B5"] = (float(B4_pair) * ring / potentials.r0, prov)
        return cls(params, potentials, B, L0, L1)

    @classmethod
    def from_config(cls, cfg: dict, mc: MonteCarloSpec | None = None):
        params = SystemParams(cfg["N"], cfg["alpha"])
        pot = PotentialPair.from_config(cfg)
        return cls.build(params, pot, cfg.get("L0", 0.5), cfg.get("L1", 2.0), cfg.get("B4"), mc)


@dataclass
class BalanceSolution:
    t_star: float
    r_star: float
    x_star_pp: list
    residual_norm: float
    iterations: int
    lam: float = float("nan")
    used_bisection: bool = False

    def to_dict(self):
        return {"t_star": self.t_star, "r_star": self.r_star, "x_star_pp": list(self.x_star_pp),
                "residual_norm": self.residual_norm, "iterations": self.iterations, "lambda": self.lam,
                "used_bisection": self.used_bisection}


def _bisect_t(model, lo, hi, tol=1e-15):
    glo, ghi = float(model.balance(lo)), float(model.balance(hi))
    if glo * ghi > 0:
        raise NoAdmissibleConfiguration(
            f"balance has no sign change on [{lo}, {hi}] (t* = {model.t_star():.6g}): no admissible configuration")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = float(model.balance(mid))
        if gm == 0:
            return mid
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    return 0.5 * (lo + hi)


def solve_reduced_system(model: ReducedEnergyModel, m: int, tol: float = 1e-12, max_iter: int = 100,
                         theta: float | None = None) -> BalanceSolution:
    """Damped Newton (finite-difference Jacobian, step halving) on F in the box
    [L0, L1] x B_theta(r0, x0''); bisection takes over for t if Newton stalls."""
    chk = potential_checks(model.potentials)
    if chk["degree_proxy"] == 0 or not chk["gradient_vanishes"]:
        raise DomainError("potential checks failed: " + "; ".join(chk["diagnostics"]))
    pot = model.potentials
    N = model.params.N
    theta = theta if theta is not None else pot.delta
    center = np.concatenate([[pot.r0], pot.x0_pp])
    lo_t, hi_t = model.L0, model.L1
    # the balance must change sign in the window
    if float(model.balance(lo_t)) * float(model.balance(hi_t)) > 0:
        raise NoAdmissibleConfiguration(
            f"balance has no sign change on [{lo_t}, {hi_t}] (t* = {model.t_star():.6g}): no admissible configuration")

    def project(v):
        v = v.copy()
        v[0] = min(max(v[0], lo_t), hi_t)
        off = v[1:] - center
        nrm = np.linalg.norm(off)
        if nrm > theta:
            v[1:] = center + off * theta / nrm
        return v

    v = project(np.concatenate([[math.sqrt(lo_t * hi_t)], center + 0.3 * theta * np.ones(N - 1) / math.sqrt(N - 1)]))
    f = model.F(v)
    it = 0
    used_bis = False
    for it in range(1, max_iter + 1):
        if np.linalg.norm(f) <= tol:
            break
        J = np.empty((N, N))
        for k in range(N):
            h = 1e-6 * max(1.0, abs(v[k]))
            e = np.zeros(N)
            e[k] = h
            J[:, k] = (model.F(v + e) - model.F(v - e)) / (2 * h)
        try:
            step = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            step = -f
        damp = 1.0
        while True:
            cand = project(v + damp * step)
            fc = model.F(cand)
            if np.linalg.norm(fc) < np.linalg.norm(f) or damp < 1e-6:
                break
            damp *= 0.5
        if np.linalg.norm(fc) >= np.linalg.norm(f):
            # Newton stalled: settle t by bisection and continue on the rest
            used_bis = True
            cand = v.copy()
            cand[0] = _bisect_t(model, lo_t, hi_t)
            fc = model.F(cand)
        v, f = cand, fc
    res = float(np.linalg.norm(f))
    if res > max(tol, 1e-8):
        raise AccuracyError(f"reduced solve stopped with residual {res:.3e}", estimate=v.tolist())
    e = (N - 2) / (N - 4)
    return BalanceSolution(float(v[0]), float(v[1]), v[2:].tolist(), res, it, float(v[0] * m ** e), used_bis)


def landscape(model: ReducedEnergyModel, t_lo: float, t_hi: float, n: int = 101):
    t = np.linspace(t_lo, t_hi, n)
    return np.stack([t, model.balance(t)], axis=1)


# ---------------------------------------------------------------------------
# energy of the ansatz


def _pot(K, y):
    if callable(K):
        return np.asarray(K(y), dtype=float)
    return np.full(np.shape(y)[:-1], float(K))


def energy_estimate(cfg: PolygonConfig, cutoff: CutoffSpec | None, K1, K2, mc: MonteCarloSpec,
                    n_inner: int = 8):
    """J(Z, Y) = int grad Z . grad Y - (1/(2p)) [D(K1 Y^p, K1 Y^p) + D(K2 Z^p, K2 Z^p)].

    The m exact single-bubble energies A1 (1 - 1/p) are added in closed form and
    Monte Carlo only sees the difference of the integrands, so the flat
    single-bubble case is exact.  Returns (J, std_error).
    """
    params = cfg.params
    p = params.two_star_alpha
    mu = params.mu
    A1 = A1_closed_form(params)
    base = cfg.m * A1 * (1.0 - 1.0 / p)
    flat = not callable(K1) and not callable(K2) and float(K1) == 1.0 and float(K2) == 1.0
    if cutoff is None and flat and cfg.m == 1:
        return base, 0.0
    bs = bubbles(cfg)
    z = polygon_centers(cfg)
    prop = BubbleMixture(z, 1.0 / cfg.lam, tail=1.0)

    def remainder(K):
        def h(y):
            v = np.stack([bubble_eval(b, y) for b in bs])
            return _pot(K, y) * (cutoff_eval(cutoff, y) * v.sum(axis=0)) ** p - np.sum(v ** p, axis=0)
        return h

    st = RunningStats()
    done, k = 0, 0
    while done < mc.sample_count:
        n = min(mc.block_size, mc.sample_count - done)
        rng = block_generator(mc.seed, k)
        x = prop.sample(rng, n)
        iw = np.exp(-prop.logpdf(x))
        v = np.stack([bubble_eval(b, x) for b in bs])
        g = np.stack([bubble_gradient(b, x) for b in bs])
        xi, gxi, _ = cutoff_derivatives(cutoff, x)
        zs = v.sum(axis=0)
        gz = xi[:, None] * g.sum(axis=0) + zs[:, None] * gxi
        grad_term = np.sum(gz * gz, axis=-1) - np.sum(g * g, axis=(0, 2))
        convs = np.stack([riesz_convolution_bubble(mu, b, x) for b in bs])
        single = np.sum(convs * v ** p, axis=0)
        Y = xi * zs
        dterms = 0.0
        for K in (K1, K2):
            Kx = _pot(K, x)
            cR, _ = riesz_convolution_mc(remainder(K), x, mu, z, 1.0 / cfg.lam, n_inner, rng,
                                         tail=params.alpha / 2.0)
            dterms = dterms + Kx * Y ** p * (convs.sum(axis=0) + cR) - single
        vals = grad_term - dterms / (2.0 * p)
        st = st.merge(RunningStats.from_samples(vals * iw))
        done += n
        k += 1
    return base + st.mean, st.std_error
