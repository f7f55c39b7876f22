"""Free resolvent kernels of the bi-Laplacian on R^4.

The boundary value of (Delta^2 - lambda^4 - i0)^{-1} is convolution with
calR(lambda, |x|) = (G_lambda - G_{i lambda}) / (2 lambda^2), where G_z is the
outgoing Helmholtz Green function of -Delta - z^2 on R^4.  Every quantity is
available through at least two independent evaluation routes:

* a convergent power series with logarithmic terms (small |z| r),
* an exponentially weighted integral done by generalized Gauss-Laguerre
  quadrature (large |z| r),
* scipy's Hankel/Bessel functions, used only as an oracle.
"""

from __future__ import annotations

import enum
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np
from scipy import special

EULER_GAMMA = float(np.euler_gamma)
LOG2 = float(np.log(2.0))
PI = float(np.pi)

SERIES_MAX_TERMS = 60
SERIES_RTOL = 1e-16
LAGUERRE_NODES = 64


def c_coeff(n: int) -> Fraction:
    """c_n = 1/(2(n+1)) + H_n, exact."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return Fraction(1, 2 * (n + 1)) + sum((Fraction(1, j) for j in range(1, n + 1)), Fraction(0))


@lru_cache(maxsize=None)
def _c_float(n: int) -> float:
    return float(c_coeff(n))


def g_log(z):
    """g(z) = -(1/2pi) log(z/2) - gamma/2pi + i/4 on the principal branch."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ValueError("g_log is undefined at z = 0")
    out = -np.log(z / 2) / (2 * PI) - EULER_GAMMA / (2 * PI) + 0.25j
    return out[()] if out.ndim == 0 else out


def tilde_g(n: int, lam):
    """Scalar factor of the even descent terms, (1/4pi)(g(lam) + c_n/2pi - i/8)."""
    if n % 2:
        raise ValueError("tilde_g is only defined for even n")
    return (g_log(lam) + _c_float(n) / (2 * PI) - 0.125j) / (4 * PI)


def _check_quadrant(z):
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag < 0) or np.any(z.real < 0):
        raise ValueError("z must lie in the closed upper-right quadrant")
    if np.any(z == 0):
        raise ValueError("z = 0 is handled by the descent terms")
    return z


class Mode(enum.Enum):
    SERIES_SMALL_ARG = "SeriesSmallArg"
    INTEGRAL_LARGE_ARG = "IntegralLargeArg"


@dataclass(frozen=True)
class KernelRegime:
    """Switch between the series and the integral route at |z| r = crossover."""

    crossover: float = 1.0

    def __post_init__(self):
        if not 0.5 <= self.crossover <= 2.0:
            raise ValueError("crossover must lie in [0.5, 2.0]")

    def mode(self, zr) -> Mode:
        return Mode.SERIES_SMALL_ARG if abs(zr) < self.crossover else Mode.INTEGRAL_LARGE_ARG

    def use_series(self, zr) -> np.ndarray:
        return np.abs(zr) < self.crossover


DEFAULT_REGIME = KernelRegime()


def _series_sum(x, coeff_fn):
    """Sum_n coeff_fn(n) * x^n / (n! (n+1)!) with a relative stopping rule."""
    x = np.asarray(x, dtype=complex)
    total = np.zeros(np.broadcast(x, coeff_fn(0)).shape, dtype=complex)
    power = np.ones_like(x)
    for n in range(SERIES_MAX_TERMS):
        term = coeff_fn(n) * power / (factorial(n) * factorial(n + 1))
        total = total + term
        if n > 2 and np.all(np.abs(term) <= SERIES_RTOL * np.maximum(np.abs(total), 1e-300)):
            break
        power = power * x
    return total


def green_series(z, r):
    """G_z(r) from its log-power series; accurate for |z| r up to about 2."""
    z = _check_quadrant(z)
    r = np.asarray(r, dtype=float)
    gz = g_log(z)
    logr = np.log(r)
    s = _series_sum(-z * z * r * r / 4, lambda n: gz + (_c_float(n) - logr) / (2 * PI))
    out = 1 / (4 * PI**2 * r * r) + z * z / (4 * PI) * s
    return out[()] if out.ndim == 0 else out


@lru_cache(maxsize=8)
def _laguerre(n: int):
    t, w = special.roots_genlaguerre(n, 0.5)
    return t, w


def green_integral(z, r, n_nodes: int = LAGUERRE_NODES):
    """G_z(r) = e^{izr}/(2 sqrt2 pi^2 r^2) int_0^inf e^{-t} t^{1/2} (t/2 - izr)^{1/2} dt."""
    z = _check_quadrant(z)
    r = np.asarray(r, dtype=float)
    t, w = _laguerre(n_nodes)
    zr = np.asarray(z * r)
    integral = np.sqrt(t / 2 - 1j * zr[..., None]) @ w
    out = np.exp(1j * zr) * integral / (2 * np.sqrt(2.0) * PI**2 * r * r)
    return out[()] if out.ndim == 0 else out


def green_hankel(z, r):
    """Oracle: G_z(r) = (i z / 8 pi r) H^{(1)}_1(z r)."""
    z = _check_quadrant(z)
    r = np.asarray(r, dtype=float)
    out = 1j * z / (8 * PI * r) * special.hankel1(1, z * r)
    return out[()] if np.ndim(out) == 0 else out


def green_kernel(z, r, regime: KernelRegime = DEFAULT_REGIME):
    """G_z(r), series below the crossover and Laguerre integral above it."""
    z = _check_quadrant(z)
    z, r = np.broadcast_arrays(z, np.asarray(r, dtype=float))
    small = regime.use_series(z * r)
    out = np.empty(z.shape, dtype=complex)
    if np.any(small):
        out[small] = green_series(z[small], r[small])
    if np.any(~small):
        out[~small] = green_integral(z[~small], r[~small])
    return out[()] if out.ndim == 0 else out


def _calR_even_coeff(lam, logr):
    # (1/4pi)(g(lam) - log r / 2pi + c_n/2pi - i/8)
    g0 = tilde_g(0, lam)
    return lambda n: (
        g0 + (_c_float(n) - _c_float(0) - logr) / (8 * PI**2)
        if n % 2 == 0
        else np.full(np.shape(logr), -1j / (32 * PI))
    )


def calR_series(lam, r):
    """calR(lam, r) from the entire series in (lam r)^2 with log(lam r) terms.

    At r = 0 the -log r/(8 pi^2) singularity is dropped and the finite part
    tilde_g(0, lam) is returned.
    """
    lam = float(lam)
    if lam <= 0:
        raise ValueError("lam must be positive")
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        logr = np.where(r > 0, np.log(np.where(r > 0, r, 1.0)), 0.0)
    out = _series_sum((lam * r) ** 2 / 4, _calR_even_coeff(lam, logr))
    return out[()] if out.ndim == 0 else out


def calR_bessel(lam, r):
    """Oracle: calR = i H1(rho)/(16 pi rho) - K1(rho)/(8 pi^2 rho) with rho = lam r."""
    rho = np.asarray(lam, dtype=float) * np.asarray(r, dtype=float)
    out = 1j * special.hankel1(1, rho) / (16 * PI * rho) - special.kv(1, rho) / (8 * PI**2 * rho)
    return out[()] if np.ndim(out) == 0 else out


def calR(lam, r, regime: KernelRegime = DEFAULT_REGIME):
    """Free resolvent kernel calR(lam, r) = R(lam r); +i0 boundary value."""
    lam = float(lam)
    if lam <= 0:
        raise ValueError("lam must be positive")
    r = np.asarray(r, dtype=float)
    small = regime.use_series(lam * r)
    out = np.empty(r.shape, dtype=complex)
    if np.any(small):
        out[small] = calR_series(lam, r[small])
    if np.any(~small):
        rr = r[~small]
        out[~small] = (green_integral(lam, rr) - green_integral(1j * lam, rr)) / (2 * lam * lam)
    return out[()] if out.ndim == 0 else out


def _falling(m: int, j: int) -> float:
    out = 1.0
    for i in range(j):
        out *= m - i
    return out


def _dfalling(m: int, j: int) -> float:
    # d/dm of m (m-1) ... (m-j+1)
    total = 0.0
    for i in range(j):
        prod = 1.0
        for k in range(j):
            if k != i:
                prod *= m - k
        total += prod
    return total


def _R_deriv_series(rho, j):
    rho = np.asarray(rho, dtype=float)
    logr = np.log(rho)
    const = (LOG2 - EULER_GAMMA) / (2 * PI) + 0.125j
    total = np.zeros(rho.shape, dtype=complex)
    for n in range(SERIES_MAX_TERMS):
        m = 2 * n
        scale = 1.0 / (4.0**n * factorial(n) * factorial(n + 1))
        if m >= j:
            pw = rho ** (m - j)
        elif m == 0:
            pw = rho ** (-float(j))
        else:
            pw = rho ** float(m - j)
        if n % 2 == 0:
            alpha = (const + _c_float(n) / (2 * PI)) / (4 * PI)
            beta = -1 / (8 * PI**2)
            term = scale * pw * (alpha * _falling(m, j) + beta * (_falling(m, j) * logr + _dfalling(m, j)))
        else:
            term = scale * pw * (-1j / (32 * PI)) * _falling(m, j)
        total += term
        if n > 2 and np.all(np.abs(term) <= SERIES_RTOL * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _R_deriv_bessel(rho, j):
    rho = np.asarray(rho, dtype=float)
    total = np.zeros(rho.shape, dtype=complex)
    for k in range(j + 1):
        hk = special.hankel1(1, rho) if k == 0 else special.h1vp(1, rho, k)
        kk = special.kv(1, rho) if k == 0 else special.kvp(1, rho, k)
        inv = (-1) ** (j - k) * factorial(j - k) * rho ** (-1.0 - (j - k))
        total += comb(j, k) * (1j * hk / (16 * PI) - kk / (8 * PI**2)) * inv
    return total


def calR_deriv(lam, r, j: int, regime: KernelRegime = DEFAULT_REGIME):
    """Exact d^j/dlam^j calR(lam, r) = r^j R^{(j)}(lam r), for r > 0."""
    r = np.asarray(r, dtype=float)
    rho = float(lam) * r
    small = regime.use_series(rho)
    out = np.empty(r.shape, dtype=complex)
    if np.any(small):
        out[small] = _R_deriv_series(rho[small], j)
    if np.any(~small):
        out[~small] = _R_deriv_bessel(rho[~small], j)
    out = out * r**j
    return out[()] if out.ndim == 0 else out


def calR_fd_deriv(lam, r, j: int, step: float | None = None):
    """Central finite difference of order j in lam.

    The default step grows with j to balance truncation against rounding:
    h = max(1e-5, 1e-5 lam) for j = 1 and a relative step of
    eps^(1/(j+2)) for higher j.
    """
    lam = float(lam)
    if j == 0:
        return calR(lam, r)
    if step is None:
        step = max(1e-5, 1e-5 * lam) if j == 1 else lam * np.finfo(float).eps ** (1.0 / (j + 2))
    step = min(step, 0.25 * lam)
    # standard central stencils for j = 1, 2, 3
    stencils = {
        1: ([-1, 1], [-0.5, 0.5]),
        2: ([-1, 0, 1], [1.0, -2.0, 1.0]),
        3: ([-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5]),
    }
    if j not in stencils:
        raise ValueError("finite differences are provided for j <= 3")
    offs, coefs = stencils[j]
    total = sum(c * calR(lam + o * step, r) for o, c in zip(offs, coefs))
    return total / step**j


@dataclass(frozen=True)
class DescentTerm:
    """Order-n term lam^{2n} (s_n(lam) G_{2n}(r) + G_{2n,l}(r)) of the small-lam expansion.

    For odd n there is no scalar factor and no log part.
    """

    n: int
    poly_coeff: complex
    log_coeff: float

    @property
    def has_log(self) -> bool:
        return self.n % 2 == 0

    def poly(self, r):
        return self.poly_coeff * np.asarray(r, dtype=float) ** (2 * self.n)

    def log_part(self, r):
        r = np.asarray(r, dtype=float)
        if not self.has_log:
            return np.zeros_like(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = self.log_coeff * r ** (2 * self.n) * np.log(r)
        if self.n > 0:
            val = np.where(r == 0, 0.0, val)
        return val

    def scalar(self, lam):
        return tilde_g(self.n, lam) if self.has_log else 1.0

    def value(self, lam, r):
        return lam ** (2 * self.n) * (self.scalar(lam) * self.poly(r) + self.log_part(r))


# mutation-testing hook: order -> multiplicative factor on the descent coefficients
_DESCENT_SCALE: dict[int, float] = {}


@contextmanager
def perturbed_descent(n: int, factor: float):
    """Temporarily scale the order-n descent coefficients (selftest mutation hook)."""
    old = _DESCENT_SCALE.get(n)
    _DESCENT_SCALE[n] = factor
    try:
        yield
    finally:
        if old is None:
            _DESCENT_SCALE.pop(n, None)
        else:
            _DESCENT_SCALE[n] = old


def descent_term(n: int) -> DescentTerm:
    if n < 0:
        raise ValueError("n must be nonnegative")
    base = _DESCENT_SCALE.get(n, 1.0) / (4.0**n * factorial(n) * factorial(n + 1))
    if n % 2 == 0:
        return DescentTerm(n, complex(base), -base / (8 * PI**2))
    return DescentTerm(n, -1j * base / (32 * PI), 0.0)


def N0(r):
    return descent_term(0).log_part(r)


def G2(r):
    return descent_term(1).poly(r)


def G4(r):
    return descent_term(2).poly(r)


def G4l(r):
    return descent_term(2).log_part(r)


def descent_sum(lam, r, n_terms: int):
    """Partial sum of the first n_terms descent terms (orders 0 .. n_terms - 1)."""
    r = np.asarray(r, dtype=float)
    total = np.zeros(r.shape, dtype=complex)
    for n in range(n_terms):
        total = total + descent_term(n).value(lam, r)
    return total


def remainder(n: int, lam, r, regime: KernelRegime = DEFAULT_REGIME):
    """calR minus the descent partial sum through order 2(n-1)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return calR(lam, r, regime) - descent_sum(lam, r, n)


@dataclass(frozen=True)
class DescentFit:
    """Coefficients of calR(lam, r) - tilde_g(0, lam) fitted in lam at fixed r."""

    r: float
    N0: float
    G2: complex
    log4: complex
    poly4: complex
    residual: float

    def expected(self) -> dict:
        """Exact values: lam^4 log lam carries -G4/8pi^2, lam^4 carries tilde_g(2,1) G4 + G4l."""
        g4 = complex(G4(self.r))
        return {
            "N0": complex(N0(self.r)),
            "G2": complex(G2(self.r)),
            "log4": -g4 / (8 * PI**2),
            "poly4": complex(tilde_g(2, 1.0)) * g4 + complex(G4l(self.r)),
        }

    def rel_errors(self) -> dict:
        """Relative errors; N0 vanishes at r = 1, so its error is scaled by max(|N0|, 1/8pi^2)."""
        got = {"N0": self.N0, "G2": self.G2, "log4": self.log4, "poly4": self.poly4}
        out = {}
        for k, v in self.expected().items():
            den = max(abs(v), 1 / (8 * PI**2)) if k == "N0" else abs(v)
            out[k] = float(abs(got[k] - v) / den)
        return out


def fit_descent_coefficients(r: float, rho_range=(0.1, 1.5), n_orders: int = 8,
                             n_samples: int = 400) -> DescentFit:
    """Least-squares fit of calR in powers lam^{2n} and lam^{2n} log lam at fixed r.

    The g_0 scalar is subtracted first; samples are Chebyshev points in lam r.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    lo, hi = rho_range[0] / r, rho_range[1] / r
    k = np.arange(n_samples) + 0.5
    lam = (lo + hi) / 2 + (hi - lo) / 2 * np.cos(PI * k / n_samples)
    f = np.array([calR(l, r) for l in lam]) - tilde_g(0, lam)
    cols, names = [], []
    for n in range(n_orders):
        cols.append(lam ** (2 * n))
        names.append((n, "p"))
        if n % 2 == 0 and n > 0:
            cols.append(lam ** (2 * n) * np.log(lam))
            names.append((n, "l"))
    A = np.array(cols).T
    scale = np.linalg.norm(A, axis=0)
    c, *_ = np.linalg.lstsq(A / scale, f, rcond=None)
    c = c / scale
    resid = float(np.linalg.norm(A @ c - f) / np.linalg.norm(f))
    d = dict(zip(names, c))
    return DescentFit(float(r), float(d[(0, "p")].real), d[(1, "p")], d[(2, "l")], d[(2, "p")], resid)


def japanese_log(x):
    """<log x> = 1 + |log x|."""
    return 1.0 + np.abs(np.log(x))
