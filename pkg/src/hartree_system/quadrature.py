"""Numerical integration: Gauss rules, radial reductions, Riesz convolutions, Monte Carlo.

The Riesz convolution of a radial (or degree-one separable) profile is reduced to
a two-dimensional integral in (s, theta).  The kernel singularity at s = r,
theta = 0 is resolved by grading the outer panels geometrically towards s = r
(parameterised by d = s - r so the offset never suffers cancellation) and the
inner panels geometrically towards theta = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .params_special import DomainError, NonIntegrableError, sphere_surface_area


class AccuracyError(RuntimeError):
    """Raised when a quadrature does not reach its tolerance; carries the partial estimate."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class QuadratureSpec:
    node_count: int = 64
    rule: str = "jacobi"  # "legendre" or "jacobi"
    a: float | None = None
    b: float | None = None
    target_rel_tol: float = 1e-8

    def __post_init__(self):
        if self.node_count < 1:
            raise DomainError("node_count must be >= 1")
        if self.rule not in ("legendre", "jacobi"):
            raise DomainError(f"unknown rule {self.rule!r}")
        for e in (self.a, self.b):
            if e is not None and not e > -1.0:
                raise DomainError("Jacobi exponents must exceed -1")


@dataclass(frozen=True)
class MonteCarloSpec:
    sample_count: int = 100_000
    seed: int = 0
    shells: int = 0  # 0 = no stratification, else number of equal-volume radial shells
    block_size: int = 65_536

    def __post_init__(self):
        if self.sample_count < 1:
            raise DomainError("sample_count must be >= 1")
        if self.shells < 0:
            raise DomainError("shells must be >= 0")

    @property
    def stratification(self):
        return "none" if self.shells == 0 else ("radial_shells", self.shells)


# ---------------------------------------------------------------------------
# 1-D Gauss rules


def _readonly(*arrays):
    for a in arrays:
        a.flags.writeable = False
    return arrays


@lru_cache(maxsize=256)
def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    if n < 1:
        raise DomainError("gauss_legendre needs n >= 1")
    x, w = np.polynomial.legendre.leggauss(int(n))
    return _readonly(x, w)


@lru_cache(maxsize=512)
def gauss_jacobi(n: int, a: float, b: float):
    """Gauss-Jacobi rule for the weight (1-s)^a (1+s)^b, by Golub-Welsch."""
    if n < 1:
        raise DomainError("gauss_jacobi needs n >= 1")
    if not (a > -1.0 and b > -1.0):
        raise DomainError(f"Jacobi exponents must exceed -1, got a={a}, b={b}")
    n = int(n)
    k = np.arange(n, dtype=float)
    ab = a + b
    diag = np.empty(n)
    diag[0] = (b - a) / (ab + 2.0)
    if n > 1:
        kk = k[1:]
        diag[1:] = (b * b - a * a) / ((2 * kk + ab) * (2 * kk + ab + 2.0))
    off = np.empty(max(n - 1, 0))
    if n > 1:
        off[0] = 4.0 * (1 + a) * (1 + b) / ((2.0 + ab) ** 2 * (3.0 + ab))
        if n > 2:
            kk = k[2:]
            off[1:] = (
                4.0 * kk * (kk + a) * (kk + b) * (kk + ab)
                / ((2 * kk + ab) ** 2 * (2 * kk + ab + 1.0) * (2 * kk + ab - 1.0))
            )
    J = np.diag(diag) + np.diag(np.sqrt(off), 1) + np.diag(np.sqrt(off), -1)
    x, v = np.linalg.eigh(J)
    # total mass 2^(a+b+1) B(a+1, b+1), from the math-module gamma on purpose
    log_mu0 = (ab + 1.0) * math.log(2.0) + math.lgamma(a + 1) + math.lgamma(b + 1) - math.lgamma(ab + 2)
    w = math.exp(log_mu0) * v[0, :] ** 2
    return _readonly(x, w)


def gegenbauer_normalized(k: int, nu: float, s):
    """C_k^(nu)(s)/C_k^(nu)(1) by the three-term recurrence; vectorised over s."""
    if k < 0:
        raise DomainError("degree must be >= 0")
    if not nu > 0:
        raise DomainError("nu must be positive")
    s = np.asarray(s, dtype=float)
    if np.any(np.abs(s) > 1.0 + 1e-14):
        raise DomainError("gegenbauer_normalized requires |s| <= 1")
    p_prev = np.ones_like(s)
    if k == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p = s.copy()
    # normalised recurrence: (n+2nu) P_(n+1) = 2(n+nu) s P_n - n P_(n-1)
    for n in range(1, k):
        p_prev, p = p, (2.0 * (n + nu) * s * p - n * p_prev) / (n + 2.0 * nu)
    return p if p.ndim else float(p)


def funk_hecke_oracle(N: int, t: float, k: int, spec: QuadratureSpec | None = None) -> float:
    """Quadrature estimate of the Funk-Hecke eigenvalue of |xi-eta|^(-t) on S^N.

    |S^(N-1)| 2^(-t/2) int_{-1}^{1} (1-s)^(-t/2) P_k(s) (1-s^2)^((N-2)/2) ds, with the
    endpoint behaviour absorbed into a Gauss-Jacobi weight.
    """
    if t >= N:
        raise NonIntegrableError(f"kernel exponent t={t} >= N={N} is not integrable on S^N")
    if not t > 0:
        raise DomainError("t must be positive")
    spec = spec or QuadratureSpec()
    a = (N - 2.0 - t) / 2.0
    b = (N - 2.0) / 2.0
    nu = (N - 1.0) / 2.0
    if spec.rule == "legendre":
        x, w = gauss_legendre(spec.node_count)
        g = (1 - x) ** a * (1 + x) ** b * gegenbauer_normalized(k, nu, x)
    else:
        if spec.a is not None and abs(spec.a - a) > 1e-14 or spec.b is not None and abs(spec.b - b) > 1e-14:
            raise DomainError(f"Jacobi exponents must be ({a}, {b}) for this kernel")
        x, w = gauss_jacobi(spec.node_count, a, b)
        g = gegenbauer_normalized(k, nu, x)
    return sphere_surface_area(N) * 2.0 ** (-t / 2.0) * float(np.dot(w, g))


# ---------------------------------------------------------------------------
# radial integrals


def radial_integral(f: Callable, N: int, tol: float = 1e-10, budget: int = 2 ** 14,
                    breaks: Sequence[float] = ()) -> float:
    """|S^(N-1)| int_0^inf r^(N-1) f(r) dr by globally adaptive Gauss-Legendre panels.

    Works in u = r/(1+r) in [0, 1) so the tail is compact.  f must accept arrays.
    `breaks` are radii where f is not smooth; they become panel edges.
    """
    x20, w20 = gauss_legendre(20)
    x10, w10 = gauss_legendre(10)

    def panel(a, b):
        h = 0.5 * (b - a)
        m = 0.5 * (a + b)
        u = np.concatenate([m + h * x20, m + h * x10])
        r = u / (1.0 - u)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            g = np.asarray(f(r), dtype=float) * r ** (N - 1) / (1.0 - u) ** 2
        g = np.where(np.isfinite(g), g, 0.0)
        hi = h * float(np.dot(w20, g[:20]))
        lo = h * float(np.dot(w10, g[20:]))
        return hi, abs(hi - lo)

    edges = [0.0] + sorted(b / (1.0 + b) for b in breaks if b > 0) + [1.0]
    panels = []
    for a, b in zip(edges[:-1], edges[1:]):
        # start with a mild grading so both ends are seen
        sub = np.linspace(a, b, 9)
        for aa, bb in zip(sub[:-1], sub[1:]):
            v, e = panel(aa, bb)
            panels.append([e, aa, bb, v])
    evals = 30 * len(panels)
    while True:
        total = sum(p[3] for p in panels)
        err = sum(p[0] for p in panels)
        if err <= tol * max(abs(total), 1e-300):
            break
        if evals + 60 > budget:
            raise AccuracyError(
                f"radial_integral did not converge within {budget} evaluations",
                estimate=sphere_surface_area(N) * total, error=sphere_surface_area(N) * err,
            )
        i = max(range(len(panels)), key=lambda j: panels[j][0])
        _, a, b, _ = panels.pop(i)
        m = 0.5 * (a + b)
        for aa, bb in ((a, m), (m, b)):
            v, e = panel(aa, bb)
            panels.append([e, aa, bb, v])
        evals += 60
    return sphere_surface_area(N) * total


# ---------------------------------------------------------------------------
# Riesz convolutions of radial / degree-one profiles


def angular_kernel(mu: float, r: float, s, d, N: int, degree: int = 0,
                   n_panels: int = 64, nodes: int = 16):
    """k(r, s) = |S^(N-2)| int_0^pi (d^2 + 4 r s sin^2(theta/2))^(-mu/2) P(cos) sin^(N-2) dtheta.

    d = s - r must be supplied (exactly) by the caller.  P = 1 for degree 0 and
    cos(theta) for degree 1.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if degree not in (0, 1):
        raise DomainError("only angular degrees 0 and 1 are supported")
    xg, wg = gauss_legendre(nodes)
    big = np.maximum(r, s)
    theta0 = np.where(big > 0, np.abs(d) / np.where(big > 0, big, 1.0), math.pi)
    theta0 = np.clip(theta0, 1e-300, math.pi)
    # geometric panels from theta0 to pi with ratio <= sqrt(2); nodes far from the
    # singularity need far fewer than n_panels, so group them by panel count
    need = np.ceil(2.0 * np.log2(math.pi / theta0)).astype(int)
    need = np.minimum(n_panels, np.maximum(16, 2 ** np.ceil(np.log2(np.maximum(need, 1))).astype(int)))
    out = np.empty(s.size)
    for n in np.unique(need):
        sel = need == n
        out[sel] = _angular_panels(mu, r, s[sel], d[sel], theta0[sel], N, degree, int(n), xg, wg)
    return out


def _angular_panels(mu, r, s, d, theta0, N, degree, n_panels, xg, wg):
    M = s.size
    # breakpoints: 0, theta0, then geometric up to pi
    frac = np.arange(n_panels + 1) / n_panels
    geo = theta0[:, None] * (math.pi / theta0[:, None]) ** frac[None, :]
    edges = np.concatenate([np.zeros((M, 1)), geo], axis=1)
    # panels with theta0 ~ pi collapse; harmless
    a = edges[:, :-1]
    b = edges[:, 1:]
    h = 0.5 * (b - a)
    th = (0.5 * (a + b))[:, :, None] + h[:, :, None] * xg[None, None, :]
    wt = h[:, :, None] * wg[None, None, :]
    sh = np.sin(0.5 * th)
    base = d[:, None, None] ** 2 + 4.0 * r * s[:, None, None] * sh * sh
    with np.errstate(divide="ignore"):
        g = base ** (-0.5 * mu) * np.sin(th) ** (N - 2)
    if degree == 1:
        g = g * np.cos(th)
    return sphere_surface_area(N - 1) * np.sum(g * wt, axis=(1, 2))


def _outer_panels(r, mu, N, levels=40):
    """Outer panels (lo, hi, coord) for 0 <= s <= 1.5 r; coord is "s" or "d" (d = s - r)."""
    panels = []
    half = 0.5 * r
    edges = half * 0.25 ** np.arange(levels + 1)
    # near zone, graded towards d = 0 from both sides
    for j in range(levels):
        panels.append((-edges[j], -edges[j + 1], "d"))
        panels.append((edges[j + 1], edges[j], "d"))
    panels.append((-edges[-1], 0.0, "d0"))
    panels.append((0.0, edges[-1], "d0"))
    # far-left zone s in [0, r/2], graded towards 0
    far = half * 0.5 ** np.arange(61)
    for j in range(60):
        panels.append((far[j + 1], far[j], "s"))
    panels.append((0.0, far[-1], "s"))
    return panels


def _split_panels(panels, r, breaks):
    out = []
    for lo, hi, kind in panels:
        shift = 0.0 if kind == "s" else r
        cuts = sorted(c - shift for c in breaks if lo < c - shift < hi)
        pts = [lo] + cuts + [hi]
        if cuts and kind == "d0":
            kind = "d"
        out.extend((a, b, kind) for a, b in zip(pts[:-1], pts[1:]))
    return out


def _panel_nodes(panels, r, mu, N, xg, wg):
    beta = N - 1.0 - mu
    S, D, W = [], [], []
    for lo, hi, kind in panels:
        if kind == "d0" and beta < 0:
            # innermost panel next to s = r carries |d|^beta in its weight
            eps = hi - lo
            xj, wj = gauss_jacobi(xg.size, 0.0, beta)
            dd = 0.5 * eps * (1.0 + xj)
            wj = wj * (0.5 * eps) ** (beta + 1.0) / dd ** beta
            sign = 1.0 if hi > 0 else -1.0
            S.append(r + sign * dd)
            D.append(sign * dd)
            W.append(wj)
            continue
        h = 0.5 * (hi - lo)
        t = 0.5 * (lo + hi) + h * xg
        if kind == "s":
            S.append(t)
            D.append(t - r)
        else:
            S.append(r + t)
            D.append(t)
        W.append(h * wg)
    return np.concatenate(S), np.concatenate(D), np.concatenate(W)


def radial_convolution(mu, f: Callable, r: float, N: int, tol: float = 1e-10,
                       degree: int = 0, breaks: Sequence[float] = (),
                       s_max_factor: float = 1e60) -> float:
    """(|.|^(-mu) * f)(x) at |x| = r for a radial profile f (degree 0).

    For degree = 1 the input field is f(|y|) * (y_i/|y|) and the return value is
    the coefficient c(r) with (|.|^(-mu) * field)(x) = c(r) x_i/|x|.
    `breaks` lists radii where f is not smooth (for example compact support edges).
    """
    mu = float(getattr(mu, "mu", mu))
    if not mu > 0:
        raise DomainError("kernel exponent must be positive")
    if mu >= N:
        raise NonIntegrableError(f"kernel exponent {mu} >= N = {N}: convolution diverges")
    r = float(r)
    if r < 0:
        raise DomainError("radius must be >= 0")
    nodes = 16
    xg, wg = gauss_legendre(nodes)

    if r == 0.0:
        if degree == 1:
            return 0.0
        # |S^(N-1)| int f(s) s^(N-1-mu) ds, graded to 0 and geometric tail
        def h(s):
            return np.asarray(f(s), dtype=float) * s ** (N - 1.0 - mu)
        edges = list(2.0 ** np.arange(-80, 1))
        total = _panel_sum(h, [0.0] + edges, xg, wg, breaks, jacobi_first=N - 1.0 - mu)
        total += _tail_sum(h, 1.0, tol, total, xg, wg, breaks, s_max_factor)
        return sphere_surface_area(N) * total

    panels = _split_panels(_outer_panels(r, mu, N), r, breaks)
    S, D, W = _panel_nodes(panels, r, mu, N, xg, wg)
    vals = _kernel_weighted(f, mu, r, S, D, W, N, degree)
    total = float(np.sum(vals))
    # tail s >= 1.5 r, geometric doublings until the remainder is negligible
    a = 1.5 * r
    s_max = s_max_factor * max(1.0, r)
    prev = None
    while True:
        if a > s_max:
            raise AccuracyError("radial_convolution tail did not converge", estimate=total)
        Sb, Db, Wb = [], [], []
        for _ in range(8):
            b = 2.0 * a
            pts = [a] + [c for c in sorted(breaks) if a < c < b] + [b]
            for lo, hi in zip(pts[:-1], pts[1:]):
                hh = 0.5 * (hi - lo)
                s = 0.5 * (lo + hi) + hh * xg
                Sb.append(s)
                Db.append(s - r)
                Wb.append(hh * wg)
            a = b
        Sb, Db, Wb = map(np.concatenate, (Sb, Db, Wb))
        part = float(np.sum(_kernel_weighted(f, mu, r, Sb, Db, Wb, N, degree)))
        total += part
        if prev is not None and abs(part) <= 0.05 * tol * abs(total) and abs(part) <= abs(prev):
            break
        if part == 0.0 and prev == 0.0:
            break
        prev = part
    return total


def _kernel_weighted(f, mu, r, S, D, W, N, degree, chunk=1024):
    out = np.empty(S.size)
    with np.errstate(over="ignore", under="ignore"):
        fv = np.asarray(f(S), dtype=float) * S ** (N - 1)
    for i in range(0, S.size, chunk):
        sl = slice(i, i + chunk)
        nz = fv[sl] != 0.0
        k = np.zeros(nz.shape)
        if np.any(nz):
            k[nz] = angular_kernel(mu, r, S[sl][nz], D[sl][nz], N, degree)
        out[sl] = fv[sl] * k * W[sl]
    return out


def _panel_sum(h, edges, xg, wg, breaks, jacobi_first=None):
    pts = sorted(set(edges) | {c for c in breaks if edges[0] < c < edges[-1]})
    total = 0.0
    for i, (lo, hi) in enumerate(zip(pts[:-1], pts[1:])):
        if i == 0 and lo == 0.0 and jacobi_first is not None and jacobi_first < 0:
            xj, wj = gauss_jacobi(xg.size, 0.0, jacobi_first)
            s = 0.5 * hi * (1.0 + xj)
            total += float(np.sum(wj * (0.5 * hi) ** (jacobi_first + 1.0) * h(s) / s ** jacobi_first))
            continue
        hh = 0.5 * (hi - lo)
        s = 0.5 * (lo + hi) + hh * xg
        total += hh * float(np.dot(wg, h(s)))
    return total


def _tail_sum(h, a, tol, head, xg, wg, breaks, s_max_factor):
    total = 0.0
    prev = None
    while True:
        if a > s_max_factor:
            raise AccuracyError("tail did not converge", estimate=head + total)
        edges = [a * 2.0 ** j for j in range(9)]
        part = _panel_sum(h, edges, xg, wg, breaks)
        total += part
        a = edges[-1]
        if prev is not None and abs(part) <= 0.05 * tol * abs(head + total) and abs(part) <= abs(prev):
            return total
        if part == 0.0 and prev == 0.0:
            return total
        prev = part


# ---------------------------------------------------------------------------
# Monte Carlo


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Counter-based generator for one sample block, keyed by (seed, block)."""
    key = (int(seed) & (2 ** 64 - 1)) | (int(block) << 64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class RunningStats:
    """Mergeable (count, mean, M2) accumulator."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def from_samples(cls, x):
        x = np.asarray(x, dtype=float)
        if x.size == 0:
            return cls()
        m = float(np.mean(x))
        return cls(int(x.size), m, float(np.sum((x - m) ** 2)))

    def merge(self, other: "RunningStats") -> "RunningStats":
        if other.n == 0:
            return RunningStats(self.n, self.mean, self.m2)
        if self.n == 0:
            return RunningStats(other.n, other.mean, other.m2)
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return RunningStats(n, mean, m2)

    @property
    def variance(self):
        return self.m2 / (self.n - 1) if self.n > 1 else float("inf")

    @property
    def std_error(self):
        return math.sqrt(self.variance / self.n) if self.n > 1 else float("inf")


def _uniform_directions(rng, n, N):
    g = rng.standard_normal((n, N))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    @property
    def dim(self):
        return len(self.center)

    def volume(self):
        N = self.dim
        return math.pi ** (N / 2) / math.gamma(N / 2 + 1) * self.radius ** N

    def shell_bounds(self, k):
        N = self.dim
        # equal-volume shells
        return [self.radius * (i / k) ** (1.0 / N) for i in range(k + 1)]

    def sample_shell(self, rng, n, r0, r1):
        N = self.dim
        u = rng.random(n)
        rad = (r0 ** N + u * (r1 ** N - r0 ** N)) ** (1.0 / N)
        return np.asarray(self.center) + rad[:, None] * _uniform_directions(rng, n, N)

    def sample(self, rng, n):
        return self.sample_shell(rng, n, 0.0, self.radius)


@dataclass(frozen=True)
class Annulus(Ball):
    inner: float = 0.0

    def volume(self):
        N = self.dim
        return math.pi ** (N / 2) / math.gamma(N / 2 + 1) * (self.radius ** N - self.inner ** N)

    def shell_bounds(self, k):
        N = self.dim
        a, b = self.inner ** N, self.radius ** N
        return [(a + (b - a) * i / k) ** (1.0 / N) for i in range(k + 1)]

    def sample(self, rng, n):
        return self.sample_shell(rng, n, self.inner, self.radius)


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    @property
    def dim(self):
        return len(self.lo)

    def volume(self):
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))

    def sample(self, rng, n):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        return lo + (hi - lo) * rng.random((n, lo.size))


def monte_carlo_integral(g: Callable, domain, spec: MonteCarloSpec):
    """Plain (optionally radially stratified) Monte Carlo estimate of int_domain g.

    g maps an (n, N) array to n values.  Returns (estimate, std_error).
    """
    if spec.sample_count < 1:
        raise DomainError("zero samples")
    vol = domain.volume()
    if spec.shells and isinstance(domain, Ball):
        bounds = domain.shell_bounds(spec.shells)
        per = max(2, spec.sample_count // spec.shells)
        est, var = 0.0, 0.0
        for i in range(spec.shells):
            st = _blocked_stats(lambda rng, n: g(domain.sample_shell(rng, n, bounds[i], bounds[i + 1])),
                                per, spec.seed, spec.block_size, block_offset=i * 2 ** 20)
            vs = vol / spec.shells
            est += vs * st.mean
            var += vs * vs * st.variance / st.n
        return est, math.sqrt(var)
    st = _blocked_stats(lambda rng, n: g(domain.sample(rng, n)), spec.sample_count,
                        spec.seed, spec.block_size)
    return vol * st.mean, vol * st.std_error


def _blocked_stats(draw, count, seed, block_size, block_offset=0):
    st = RunningStats()
    done = 0
    block = 0
    while done < count:
        n = min(block_size, count - done)
        vals = np.asarray(draw(block_generator(seed, block_offset + block), n), dtype=float)
        st = st.merge(RunningStats.from_samples(vals))
        done += n
        block += 1
    return st


# ---------------------------------------------------------------------------
# importance sampling with bubble-shaped and kernel-shaped proposals


def _log_beta(a, b):
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


@dataclass(frozen=True)
class BubbleProposal:
    """Density q(y) = 2 (1+u^2)^(-N/2-c) / (B(N/2, c) |S^(N-1)| l^N), u = |y-center|/l."""

    center: np.ndarray
    scale: float
    tail: float = 1.0

    def sample(self, rng, n):
        N = self.center.size
        x = rng.beta(N / 2.0, self.tail, n)
        u = np.sqrt(x / (1.0 - x))
        return self.center + (self.scale * u)[:, None] * _uniform_directions(rng, n, N)

    def logpdf(self, y):
        N = self.center.size
        u2 = np.sum((y - self.center) ** 2, axis=-1) / self.scale ** 2
        return (math.log(2.0) - (N / 2.0 + self.tail) * np.log1p(u2)
                - _log_beta(N / 2.0, self.tail) - math.log(sphere_surface_area(N))
                - N * math.log(self.scale))


class BubbleMixture:
    """Equal-weight mixture of BubbleProposal components."""

    def __init__(self, centers, scale, tail=1.0):
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        self.components = [BubbleProposal(c, float(scale), float(tail)) for c in centers]

    def sample(self, rng, n):
        k = len(self.components)
        idx = rng.integers(0, k, n)
        out = np.empty((n, self.components[0].center.size))
        for j, c in enumerate(self.components):
            sel = idx == j
            if np.any(sel):
                out[sel] = c.sample(rng, int(sel.sum()))
        return out

    def logpdf(self, y):
        logs = np.stack([c.logpdf(y) for c in self.components])
        m = np.max(logs, axis=0)
        return m + np.log(np.mean(np.exp(logs - m), axis=0))


def importance_integral(g: Callable, proposal, n: int, seed: int, block_size: int = 65_536):
    """Estimate int_{R^N} g by sampling from `proposal`; returns (estimate, std_error)."""
    def draw(rng, k):
        y = proposal.sample(rng, k)
        return np.asarray(g(y), dtype=float) * np.exp(-proposal.logpdf(y))
    st = _blocked_stats(draw, n, seed, block_size)
    return st.mean, st.std_error


def riesz_convolution_mc(h: Callable, x, mu: float, anchors, scale: float,
                         n_inner: int, rng: np.random.Generator, tail: float = 1.0,
                         singular_weight: float = 0.5, chunk: int = 64):
    """Unbiased estimates of (|.|^(-mu) * h)(x_p) for each row x_p of x.

    The proposal mixes a kernel-shaped component centred at x_p (radial law
    |y-x|/scale ~ BetaPrime(N-mu, 1), which cancels the singularity) with
    bubble-shaped components at each anchor.  Returns (estimates, std_errors).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    P, N = x.shape
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    A = anchors.shape[0]
    a_s = N - mu
    b_s = 1.0
    log_sn = math.log(sphere_surface_area(N))
    lb_s = _log_beta(a_s, b_s)
    lb_b = _log_beta(N / 2.0, tail)
    est = np.empty(P)
    se = np.empty(P)
    ws = singular_weight
    wb = (1.0 - ws) / A
    for i0 in range(0, P, chunk):
        xs = x[i0:i0 + chunk]
        p = xs.shape[0]
        M = n_inner
        comp = rng.random((p, M))
        is_sing = comp < ws
        which = rng.integers(0, A, (p, M))
        dirs = rng.standard_normal((p, M, N))
        dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
        xb = rng.beta(a_s, b_s, (p, M))
        xb = np.clip(xb, 1e-300, 1.0 - 1e-16)
        rad_s = scale * xb / (1.0 - xb)
        xu = rng.beta(N / 2.0, tail, (p, M))
        xu = np.clip(xu, 0.0, 1.0 - 1e-16)
        rad_b = scale * np.sqrt(xu / (1.0 - xu))
        base = np.where(is_sing[..., None], xs[:, None, :], anchors[which])
        rad = np.where(is_sing, rad_s, rad_b)
        y = base + rad[..., None] * dirs
        # log densities of every component at y
        rho = np.linalg.norm(y - xs[:, None, :], axis=2)
        rho = np.maximum(rho, 1e-300)
        v = rho / scale
        log_qs = ((a_s - 1.0) * np.log(v) - (a_s + b_s) * np.log1p(v) - lb_s
                  - math.log(scale) - log_sn - (N - 1.0) * np.log(rho))
        logs = [math.log(ws) + log_qs]
        for j in range(A):
            u2 = np.sum((y - anchors[j]) ** 2, axis=2) / scale ** 2
            logs.append(math.log(wb) + math.log(2.0) - (N / 2.0 + tail) * np.log1p(u2)
                        - lb_b - log_sn - N * math.log(scale))
        logs = np.stack(logs)
        mx = np.max(logs, axis=0)
        log_q = mx + np.log(np.sum(np.exp(logs - mx), axis=0))
        hv = np.asarray(h(y.reshape(-1, N)), dtype=float).reshape(p, M)
        with np.errstate(over="ignore", invalid="ignore"):
            wts = hv * np.exp(-mu * np.log(rho) - log_q)
        wts = np.where(hv == 0.0, 0.0, wts)
        est[i0:i0 + p] = wts.mean(axis=1)
        se[i0:i0 + p] = wts.std(axis=1, ddof=1) / math.sqrt(M) if M > 1 else np.inf
    return est, se
