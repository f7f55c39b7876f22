"""Spectral projection, the operator K, Born terms and the stationary wave operator.

Test functions have Fourier transforms supported in an annulus alpha <= |xi|
<= beta.  Fourier transforms are unitary, u^(xi) = (2 pi)^-2 int e^{-ix.xi} u,
and

    Pi(lam) u(x) = (2 pi)^-2 int_{S^3} e^{i lam x.w} u^(lam w) dw,

so that int_0^inf Pi(lam) u lam^3 dlam = u.  For radial u^ = f(|xi|) this is
f(lam) J1(lam |x|) / (lam |x|).

The wave-operator engine works in the radial sector: for radial V and radial
u every operator in the stationary formula preserves radial functions, and
the free resolvent reduces to its l = 0 angular block on the radial shells.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, special

from . import kernels as kn
from .grid import Grid4, Potential, build_grid
from .operators import calR_mu, radial_galerkin

PI = float(np.pi)
LAMBDA_NODES = 96
SPHERE_NODES = 24
DEFAULT_SUPPORT = (2.0, 3.0)
K1_EPSILONS = (1e-2, 1e-3, 1e-4)
RADIAL_TAIL = 240.0
RADIAL_NODES = 4800
# the multiplier round trip needs a longer tail; 400 lambda nodes keep u(r) alias-free out to r = 480
MULT_TAIL = 480.0
MULT_RADIAL_NODES = 9600
MULT_LAMBDA_NODES = 400


# ---------------------------------------------------------------------------
# cutoffs and elementary functions


def _smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        e0 = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        e1 = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return e0 / (e0 + e1)


def chi_le(lam, a: float = 1.0):
    """Equal to 1 for lam <= a and 0 for lam >= 2a."""
    if a <= 0:
        raise ValueError("cutoff a must be positive")
    return 1.0 - _smooth_step(np.asarray(lam, dtype=float) / a - 1.0)


def chi_ge(lam, a: float = 1.0):
    return 1.0 - chi_le(lam, a)


def j1_ratio(z):
    """J1(z)/z, with the limit 1/2 at z = 0."""
    z = np.asarray(z, dtype=float)
    safe = np.where(z == 0, 1.0, z)
    return np.where(z == 0, 0.5, special.j1(safe) / safe)


def j1_ratio_prime(z):
    """d/dz [J1(z)/z] = -J2(z)/z."""
    z = np.asarray(z, dtype=float)
    safe = np.where(z == 0, 1.0, z)
    return np.where(z == 0, 0.0, -special.jv(2, safe) / safe)


def _bump(alpha: float, beta: float) -> Callable:
    def f(k):
        t = (np.asarray(k, dtype=float) - alpha) / (beta - alpha)
        inside = (t > 0) & (t < 1)
        ts = np.where(inside, t, 0.5)
        return np.where(inside, np.exp(4.0 - 1.0 / (ts * (1.0 - ts))), 0.0)

    return f


def sphere_rule(n: int = SPHERE_NODES) -> tuple[np.ndarray, np.ndarray]:
    """Product rule on S^3 in hyperspherical angles; weights sum to 2 pi^2."""
    x, w = _gauss_legendre(n)
    chi, wchi = PI * (x + 1) / 2, PI * w / 2
    th, wth = chi, wchi
    ph = 2 * PI * np.arange(2 * n) / (2 * n)
    wph = np.full(2 * n, PI / n)
    C, T, F = np.meshgrid(chi, th, ph, indexing="ij")
    W = (wchi * np.sin(chi) ** 2)[:, None, None] * (wth * np.sin(th))[None, :, None] * wph[None, None, :]
    nodes = np.stack([
        np.cos(C),
        np.sin(C) * np.cos(T),
        np.sin(C) * np.sin(T) * np.cos(F),
        np.sin(C) * np.sin(T) * np.sin(F),
    ], axis=-1).reshape(-1, 4)
    return nodes, W.ravel()


# ---------------------------------------------------------------------------
# test functions


@dataclass(frozen=True, eq=False)
class TestFunction:
    """u with u^(xi) = f(|xi|) prod_j (i xi_j/|xi|) e^{-i shift.xi}, f supported in [alpha, beta]."""

    __test__ = False  # not a pytest class

    profile: Callable
    alpha: float
    beta: float
    shift: tuple = (0.0, 0.0, 0.0, 0.0)
    riesz: tuple = ()
    n_lambda: int = LAMBDA_NODES

    def __post_init__(self):
        if not 0 < self.alpha < self.beta:
            raise ValueError("need 0 < alpha < beta")

    @classmethod
    def bump(cls, alpha: float = DEFAULT_SUPPORT[0], beta: float = DEFAULT_SUPPORT[1]) -> "TestFunction":
        return cls(_bump(alpha, beta), alpha, beta)

    @property
    def is_radial(self) -> bool:
        return not self.riesz and not np.any(self.shift)

    @cached_property
    def lam_rule(self) -> tuple[np.ndarray, np.ndarray]:
        x, w = _gauss_legendre(self.n_lambda)
        h = (self.beta - self.alpha) / 2
        return self.alpha + h * (x + 1), h * w

    def radial_hat(self, k):
        k = np.asarray(k, dtype=float)
        inside = (k >= self.alpha) & (k <= self.beta)
        return np.where(inside, self.profile(k), 0.0)

    def hat(self, xi):
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        k = np.linalg.norm(xi, axis=-1)
        out = self.radial_hat(k).astype(complex)
        safe = np.where(k == 0, 1.0, k)
        for j in self.riesz:
            out = out * 1j * xi[..., j] / safe
        if np.any(self.shift):
            out = out * np.exp(-1j * xi @ np.asarray(self.shift, dtype=float))
        return out

    def multiply(self, f: Callable) -> "TestFunction":
        """f(|D|) u."""
        prof = self.profile
        return replace(self, profile=lambda k: f(k) * prof(k))

    def translate(self, a) -> "TestFunction":
        """tau_a u = u(. - a)."""
        return replace(self, shift=tuple(np.asarray(self.shift, dtype=float) + np.asarray(a, dtype=float)))

    def riesz_transform(self, j: int) -> "TestFunction":
        return replace(self, riesz=self.riesz + (j,))

    def dilate(self, s: float) -> "TestFunction":
        """u_s(x) = s^2 u(s x), so u_s^(xi) = s^-2 u^(xi/s)."""
        prof = self.profile
        return replace(self, profile=lambda k: prof(np.asarray(k) / s) / s**2,
                       alpha=self.alpha * s, beta=self.beta * s)

    def radial_values(self, r) -> np.ndarray:
        """u(r) = int f(k) k^3 J1(k r)/(k r) dk for radial u."""
        if self.riesz:
            raise NotImplementedError("physical-space values of Riesz transforms are not tabulated")
        k, w = self.lam_rule
        r = np.asarray(r, dtype=float)
        kern = j1_ratio(np.multiply.outer(r, k))
        return kern @ (w * self.radial_hat(k) * k**3)

    def radial_derivative(self, r) -> np.ndarray:
        k, w = self.lam_rule
        r = np.asarray(r, dtype=float)
        kern = j1_ratio_prime(np.multiply.outer(r, k))
        return kern @ (w * self.radial_hat(k) * k**4)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim >= 1 and x.shape[-1] == 4:
            return self.radial_values(np.linalg.norm(x - np.asarray(self.shift), axis=-1))
        if np.any(self.shift):
            raise ValueError("shifted test functions need points in R^4")
        return self.radial_values(x)

    def hat_norm(self) -> float:
        k, w = self.lam_rule
        return float(np.sqrt(2 * PI**2 * np.sum(w * np.abs(self.radial_hat(k)) ** 2 * k**3)))

    def norm(self, R: float = RADIAL_TAIL, n: int = RADIAL_NODES) -> float:
        r, w = _radial_nodes(R, n)
        return float(np.sqrt(2 * PI**2 * np.sum(w * np.abs(self.radial_values(r)) ** 2 * r**3)))


@lru_cache(maxsize=8)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = special.roots_legendre(n)
    return x, w


def _radial_nodes(R: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gauss_legendre(n)
    return R * (x + 1) / 2, R * w / 2


# ---------------------------------------------------------------------------
# spectral projection


def spectral_projection(lam: float, u: TestFunction, x, method: str = "auto", n_sphere: int = SPHERE_NODES):
    """Pi(lam) u at the points x (shape (..., 4)) or radii x for radial u."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    x = np.asarray(x, dtype=float)
    pts = x if (x.ndim >= 1 and x.shape[-1] == 4) else None
    if not (u.alpha <= lam <= u.beta):
        shape = pts.shape[:-1] if pts is not None else x.shape
        return np.zeros(shape, dtype=complex)
    if method == "auto" and u.is_radial:
        r = np.linalg.norm(pts, axis=-1) if pts is not None else x
        return (u.radial_hat(lam) * j1_ratio(lam * r)).astype(complex)
    if pts is None:
        raise ValueError("non-radial projection needs points in R^4")
    nodes, w = sphere_rule(n_sphere)
    hat = u.hat(lam * nodes)
    phase = np.exp(1j * lam * pts.reshape(-1, 4) @ nodes.T)
    return (phase @ (w * hat) / (2 * PI) ** 2).reshape(pts.shape[:-1])


def projection_at_origin(lam: float, u: TestFunction, n_sphere: int = SPHERE_NODES) -> complex:
    if u.is_radial:
        return complex(u.radial_hat(lam) / 2)
    return complex(spectral_projection(lam, u, np.zeros((1, 4)), "sphere", n_sphere)[0])


def resolvent_jump(lam: float, u: TestFunction, r: float, eps: float) -> complex:
    """(2/(pi i)) (R0(lam^4 - i eps) - R0(lam^4 + i eps)) u at radius r, radial u.

    Used to fix the normalization of Pi: the limit eps -> 0 is -Pi(lam)u(r).
    In sigma = k^4 - lam^4 the integrand is G(sigma) eps/(sigma^2 + eps^2);
    the value G(0) is integrated in closed form.
    """
    def G(sig):
        k = (sig + lam**4) ** 0.25
        return u.radial_hat(k) * j1_ratio(k * r) / 4

    lo, hi = u.alpha**4 - lam**4, u.beta**4 - lam**4
    g0 = G(0.0)
    peak = g0 * (np.arctan(hi / eps) - np.arctan(lo / eps))
    rest, _ = integrate.quad(lambda s: (G(s) - g0) * eps / (s * s + eps * eps), lo, hi,
                             points=[0.0], limit=400, epsabs=1e-14, epsrel=1e-12)
    return complex(-4.0 / PI * (peak + rest))


def multiplier_identity_defect(f: Callable, lam: float, u: TestFunction, x) -> float:
    """Relative defect of f(lam) Pi(lam) u(x) = Pi(lam) f(|D|) u(x).

    The right side goes through physical space: f(|D|)u is tabulated from its
    Fourier profile, transformed back by a Hankel quadrature at lam and then
    projected; the left side is the direct sphere quadrature.
    """
    lhs = f(lam) * spectral_projection(lam, u, x, method="sphere")
    fu = replace(u.multiply(f), n_lambda=max(u.n_lambda, MULT_LAMBDA_NODES))
    r, w = _radial_nodes(MULT_TAIL, MULT_RADIAL_NODES)
    g = fu.radial_values(r)
    ghat = np.sum(w * g * r**3 * j1_ratio(lam * r))
    rhs_radial = TestFunction(lambda k: np.full(np.shape(k), ghat), u.alpha, u.beta, u.shift, u.riesz)
    rhs = spectral_projection(lam, rhs_radial, x, method="sphere")
    return float(np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(lhs)), 1e-300))


# ---------------------------------------------------------------------------
# the operator K and its closed forms


def _radii(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.linalg.norm(x, axis=-1) if (x.ndim >= 1 and x.shape[-1] == 4) else x


def _pi0_samples(u: TestFunction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lam, w = u.lam_rule
    pi0 = np.array([projection_at_origin(l, u) for l in lam])
    return lam, w, pi0


def K_apply(u: TestFunction, x) -> np.ndarray:
    """K u(x) = int calR(lam, |x|) (Pi(lam) u)(0) lam^3 dlam."""
    r = np.atleast_1d(_radii(x))
    lam, w, pi0 = _pi0_samples(u)
    vals = np.array([kn.calR(l, r) for l in lam])
    return (w * pi0 * lam**3) @ vals


def K1_apply(u: TestFunction, x) -> np.ndarray:
    """K1 u(x) = int G_lam(|x|) (Pi(lam) u)(0) lam dlam, x != 0."""
    r = np.atleast_1d(_radii(x))
    if np.any(r == 0):
        raise ValueError("K1 u is evaluated away from x = 0")
    lam, w, pi0 = _pi0_samples(u)
    vals = np.array([kn.green_kernel(l, r) for l in lam])
    return (w * pi0 * lam) @ vals


def K2_apply(u: TestFunction, x) -> np.ndarray:
    """K2 u(x) = int G_{i lam}(|x|) (Pi(lam) u)(0) lam dlam, x != 0."""
    r = np.atleast_1d(_radii(x))
    if np.any(r == 0):
        raise ValueError("K2 u is evaluated away from x = 0")
    lam, w, pi0 = _pi0_samples(u)
    vals = np.array([kn.green_kernel(1j * l, r) for l in lam])
    return (w * pi0 * lam) @ vals


def K1_eps(u: TestFunction, r: float, eps: float, n: int = 96) -> complex:
    """-1/((4 pi^2)^2 (r^2 + i eps)) int u(y)/(r^2 - |y|^2 + i eps) dy for radial u.

    With sigma = |y|^2 the integral is 2 pi^2 int h(sigma)/(c + i eps - sigma),
    h = sigma u(sqrt sigma)/2, c = r^2.  On [0, 2c] the first-order Taylor
    polynomial of h at c is subtracted and integrated in closed form.
    """
    if not u.is_radial:
        raise ValueError("the closed form is implemented for radial u")
    c = r * r
    ce = c + 1j * eps
    h = lambda sig: sig * u.radial_values(np.sqrt(sig)) / 2
    hc = c * u.radial_values(r) / 2
    dhc = u.radial_values(r) / 2 + r * u.radial_derivative(r) / 4
    logs = np.log(ce) - np.log(ce - 2 * c)
    near = hc * logs + dhc * (-2 * c + 1j * eps * logs)
    x, w = _gauss_legendre(n)
    for lo, hi in ((0.0, c), (c, 2 * c)):
        sig = lo + (hi - lo) * (x + 1) / 2
        g = h(sig) - hc - dhc * (sig - c)
        near += (hi - lo) / 2 * np.sum(w * g / (ce - sig))
    s, ws = _radial_nodes(RADIAL_TAIL - np.sqrt(2) * r, RADIAL_NODES)
    s = s + np.sqrt(2) * r
    far = np.sum(ws * u.radial_values(s) * s**3 / (ce - s * s))
    total = 2 * PI**2 * (near + far)
    return complex(-total / ((4 * PI**2) ** 2 * (c + 1j * eps)))


def K1_oracle(u: TestFunction, r: float, eps=K1_EPSILONS) -> complex:
    """eps -> 0 limit of K1_eps by Richardson extrapolation (error linear in eps)."""
    vals = [K1_eps(u, r, e) for e in eps]
    e1, e2 = eps[-2], eps[-1]
    return complex(vals[-1] + (vals[-1] - vals[-2]) * e2 / (e1 - e2))


def K2_closed(u: TestFunction, r: float) -> complex:
    """(4 pi^2)^-2 |x|^-2 int u(y)/(|x|^2 + |y|^2) dy for radial u."""
    if not u.is_radial:
        raise ValueError("the closed form is implemented for radial u")
    s, w = _radial_nodes(RADIAL_TAIL, RADIAL_NODES)
    val = 2 * PI**2 * np.sum(w * u.radial_values(s) * s**3 / (r * r + s * s))
    return complex(val / ((4 * PI**2) ** 2 * r * r))


# ---------------------------------------------------------------------------
# radial sector


@dataclass(frozen=True, eq=False)
class RadialSector:
    """Radial functions on the shells of a grid; operators are l = 0 blocks."""

    grid: Grid4
    V: np.ndarray
    profile: Callable | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_potential(cls, pot: Potential, n_radial: int = 96, R_max: float = 16.0) -> "RadialSector":
        if not pot.is_radial:
            raise ValueError("the wave-operator engine needs a radial potential")
        grid = build_grid(n_radial, R_max)
        if pot.is_zero:
            return cls(grid, np.zeros(n_radial), lambda r: np.zeros_like(np.asarray(r, dtype=float)))
        return cls(grid, np.asarray(pot.evaluate(grid.r), dtype=float), pot.evaluate)

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    @cached_property
    def sqrt_rho(self) -> np.ndarray:
        return np.sqrt(self.grid.radial_weights)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.V)

    def resolvent(self, lam: float) -> np.ndarray:
        """l = 0 block of R0(lam^4) in orthonormal radial coordinates."""
        key = float(lam)
        if key not in self._cache:
            rg = radial_galerkin(self.grid)
            r_pts, s_pts = rg.points
            self._cache[key] = rg.orthonormal_matrix(calR_mu(key, r_pts, s_pts, 0)[0])
        return self._cache[key]

    def norm(self, values) -> float:
        return float(np.sqrt(2 * PI**2 * np.sum(self.grid.radial_weights * np.abs(values) ** 2)))

    def lp_norm(self, values, p: float) -> float:
        return float((2 * PI**2 * np.sum(self.grid.radial_weights * np.abs(values) ** p)) ** (1 / p))

    def support_radius(self, rtol: float = 1e-16) -> float:
        if self.profile is None:
            raise ValueError("support radius needs the potential profile")
        rr = np.linspace(0, 4 * self.grid.R_max, 4001)
        vals = np.abs(self.profile(rr))
        big = np.flatnonzero(vals > rtol * vals.max())
        return float(rr[big[-1]]) if big.size else 0.0


def _require_radial(u: TestFunction):
    if not u.is_radial:
        raise ValueError("the radial-sector engine needs a radial test function")


def _lambda_weights(u: TestFunction, a: float | None):
    lam, w = u.lam_rule
    amp = u.radial_hat(lam) * (1.0 if a is None else chi_ge(lam, a))
    return lam, w * amp * lam**3


def born_terms(u: TestFunction, sector: RadialSector, n_max: int = 3, a: float | None = 1.0) -> list[np.ndarray]:
    """[W_1 u, ..., W_n u] on the shells, W_n = int R0 (V R0)^(n-1) V Pi(lam) u lam^3 chi_ge dlam."""
    _require_radial(u)
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    out = [np.zeros(len(sector.r), dtype=complex) for _ in range(n_max)]
    if sector.is_zero:
        return out
    lam, wt = _lambda_weights(u, a)
    sq = sector.sqrt_rho
    for l, c in zip(lam, wt):
        if c == 0:
            continue
        R = sector.resolvent(l)
        t = sector.V * sq * j1_ratio(l * sector.r)
        for n in range(n_max):
            y = R @ t
            out[n] += c * y / sq
            t = sector.V * y
    return out


def born_term(n: int, u: TestFunction, pot: Potential | RadialSector, a: float | None = 1.0) -> np.ndarray:
    """W_n chi_ge(|D|) u on the radial shells, n in {1, 2, 3}."""
    if n not in (1, 2, 3):
        raise ValueError("n must be 1, 2 or 3")
    sector = pot if isinstance(pot, RadialSector) else RadialSector.from_potential(pot)
    return born_terms(u, sector, n, a)[n - 1]


def _zonal_convolution(lam: float, g: Callable, rho, R_V: float, n_s: int = 160, n_theta: int = 48):
    """int calR(lam, |z|) g(|x - z|) dz at |x| = rho for radial g vanishing beyond R_V.

    Polar coordinates centred at the kernel singularity: z = s w, the angle
    between w and x restricted to where |x - z| <= R_V.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    xs, ws = _gauss_legendre(n_s)
    xt, wt = _gauss_legendre(n_theta)
    out = np.empty(rho.shape, dtype=complex)
    for i, p in enumerate(rho):
        lo, hi = max(0.0, p - R_V), p + R_V
        s = lo + (hi - lo) * (xs + 1) / 2
        sw = ws * (hi - lo) / 2
        with np.errstate(divide="ignore", invalid="ignore"):
            cmax = np.where(p * s > 0, (p * p + s * s - R_V * R_V) / (2 * p * s), -1.0)
        tmax = np.arccos(np.clip(cmax, -1.0, 1.0))
        th = tmax[:, None] * (xt[None, :] + 1) / 2
        tw = tmax[:, None] * wt[None, :] / 2
        d = np.sqrt(np.maximum(p * p + s[:, None] ** 2 - 2 * p * s[:, None] * np.cos(th), 0.0))
        shell = 4 * PI * np.sum(tw * np.sin(th) ** 2 * g(d), axis=1)
        out[i] = np.sum(sw * s**3 * kn.calR(lam, s) * shell)
    return out


def born_w2_translated(u: TestFunction, sector: RadialSector, r_out, a: float | None = 1.0,
                       n_table: int = 64) -> np.ndarray:
    """W_2 chi_ge(|D|) u as a superposition of translates.

    Writes M_V R0 M_V as int V(x) V(x - y) calR(lam |y|) tau_y dy and
    integrates in the translation variable, so every resolvent application is
    a quadrature centred at the kernel singularity; the intermediate function
    is tabulated on Chebyshev points of [0, R_V].
    """
    _require_radial(u)
    r_out = np.atleast_1d(np.asarray(r_out, dtype=float))
    if sector.is_zero:
        return np.zeros(r_out.shape, dtype=complex)
    R_V = sector.support_radius()
    Vf = sector.profile
    cheb = np.polynomial.chebyshev
    nodes = R_V * (np.cos(PI * (np.arange(n_table) + 0.5) / n_table) + 1) / 2
    lam, wt = _lambda_weights(u, a)
    out = np.zeros(r_out.shape, dtype=complex)
    for l, c in zip(lam, wt):
        if c == 0:
            continue
        first = _zonal_convolution(l, lambda d: Vf(d) * j1_ratio(l * d), nodes, R_V)
        coef = cheb.chebfit(2 * nodes / R_V - 1, first, n_table - 1)
        F = lambda d: cheb.chebval(2 * np.minimum(d, R_V) / R_V - 1, coef)
        out += c * _zonal_convolution(l, lambda d: Vf(d) * F(d), r_out, R_V)
    return out


def stationary_wave_op(u: TestFunction, pot: Potential | RadialSector, a: float | None = None,
                       cond_max: float = 1e12) -> np.ndarray:
    """W_- chi_ge(|D|) u = chi_ge(|D|) u - int R0 Q_v(lam) Pi(lam) u lam^3 chi_ge dlam on the shells.

    Q_v = M_v M(lam^4)^-1 M_v with M = U + M_v R0 M_v, solved per lam node on
    the support of V.
    """
    _require_radial(u)
    sector = pot if isinstance(pot, RadialSector) else RadialSector.from_potential(pot)
    base = u if a is None else u.multiply(lambda k: chi_ge(k, a))
    out = base.radial_values(sector.r).astype(complex)
    if sector.is_zero:
        return out
    sup = np.flatnonzero(sector.V != 0)
    v = np.sqrt(np.abs(sector.V[sup]))
    U = np.sign(sector.V[sup])
    sq = sector.sqrt_rho
    lam, wt = _lambda_weights(u, a)
    for l, c in zip(lam, wt):
        if c == 0:
            continue
        R = sector.resolvent(l)
        M = np.diag(U).astype(complex) + v[:, None] * R[np.ix_(sup, sup)] * v[None, :]
        sig = np.linalg.svd(M, compute_uv=False)
        if sig[0] > cond_max * sig[-1]:
            raise np.linalg.LinAlgError(f"M(lam^4) ill-conditioned at lam = {l:.4g}")
        phi = sq[sup] * j1_ratio(l * sector.r[sup])
        q = v * np.linalg.solve(M, v * phi)
        out -= c * (R[:, sup] @ q) / sq
    return out


@dataclass(frozen=True)
class ProbeRow:
    p: float
    s: float
    ratio: float


def lp_probe(pot: Potential | RadialSector, ps=(1.5, 2.0, 3.0, 6.0), scales=(1.0, 2.0, 4.0),
             u: TestFunction | None = None, a: float | None = None) -> list[ProbeRow]:
    """Heuristic: ||W_- u_s||_p / ||u_s||_p for dilates u_s(x) = s^2 u(s x) on the radial shells."""
    sector = pot if isinstance(pot, RadialSector) else RadialSector.from_potential(pot)
    u = TestFunction.bump() if u is None else u
    rows = []
    for s in scales:
        us = u.dilate(s)
        w = stationary_wave_op(us, sector, a)
        base = us.radial_values(sector.r)
        for p in ps:
            rows.append(ProbeRow(p, s, sector.lp_norm(w, p) / sector.lp_norm(base, p)))
    return rows
