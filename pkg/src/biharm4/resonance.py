"""Zero-energy resonance functions built from kernel vectors of QT0Q.

For zeta in S1 the function

    phi(x) = -c0 - (1/8 pi^2) int log|x - y| v(y) zeta(y) dy,   c0 = <T0 zeta, v> / ||v||^2

solves (Delta^2 + V) phi = 0 and zeta = -w phi.  Far from the support of V,

    phi(x) = -c0 + a.x/|x|^2 + (A x.x)/|x|^4 + O(|x|^-3)

with a_j = (1/8 pi^2) int y_j v zeta, b = (1/8 pi^2) int |y|^2 v zeta,
a_jk = (1/8 pi^2) int y_j y_k v zeta and A = (a_jk) - (b/2) I.  These are the
constants of the second-order Taylor expansion of log|x - y| in y; see
notes in the README for the sign convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Potential
from .operators import compute_T0, kernel_operator

PI = float(np.pi)
TYPE_THRESHOLD = 1e-5
MEMBERSHIP_TOL = 1e-6
RAY_DIRECTION = np.array([1.0, 0.7, 0.4, 0.2]) / np.linalg.norm([1.0, 0.7, 0.4, 0.2])
RAY_RADII = np.geomspace(10.0, 100.0, 24)
FIT_EXPONENT_MAX = -2.5
DECAY_RTOL = 1e-8
TYPES = ("s", "p", "d", "eigenfunction")


@dataclass(frozen=True, eq=False)
class ResonanceFunction:
    zeta: np.ndarray
    phi: np.ndarray
    c0: float
    a: np.ndarray
    b: float
    a_jk: np.ndarray
    A: np.ndarray
    type: str
    ray_direction: np.ndarray = field(default_factory=lambda: RAY_DIRECTION.copy())
    ray_r: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ray_phi: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ray_model: np.ndarray = field(default_factory=lambda: np.zeros(0))
    fit_exponent: float = float("nan")
    fit_ok: bool | None = None
    fit_note: str = ""

    def to_dict(self) -> dict:
        return {
            "type": self.type,
            "c0": self.c0,
            "a": self.a.tolist(),
            "b": self.b,
            "A": self.A.tolist(),
            "fit_exponent": self.fit_exponent,
            "fit_ok": self.fit_ok,
            "fit_note": self.fit_note,
        }

    def ray_table(self) -> np.ndarray:
        """Columns r, phi(r e), model(r e)."""
        return np.column_stack([self.ray_r, self.ray_phi, self.ray_model])


def _inner(pot: Potential, f, g) -> complex:
    return complex(np.sum(pot.grid.weights * np.conj(f) * g))


def _norm(pot: Potential, f) -> float:
    return float(np.sqrt(np.sum(pot.grid.weights * np.abs(f) ** 2)))


def real_phase(zeta: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Rotate zeta by a global phase so that it is real when it can be."""
    zeta = np.asarray(zeta)
    if not np.iscomplexobj(zeta):
        return zeta.astype(float)
    s = np.sum(weights * zeta * zeta)
    rot = zeta * np.exp(-0.5j * np.angle(s)) if abs(s) > 0 else zeta
    if np.linalg.norm(rot.imag) <= 1e-10 * np.linalg.norm(rot):
        return rot.real.copy()
    return rot


def _check_member(zeta, pot: Potential, tol: float) -> np.ndarray:
    if pot.is_zero:
        raise ValueError("resonances need a nonzero potential")
    zeta = real_phase(zeta, pot.grid.weights)
    nz = _norm(pot, zeta)
    if nz == 0:
        raise ValueError("zeta must be nonzero")
    moment = abs(_inner(pot, pot.v, zeta))
    if moment > tol * _norm(pot, pot.v) * nz:
        raise ValueError(f"zeta is not in range(Q): |<v, zeta>| = {moment:.3e}")
    return zeta


def compute_c0(zeta, pot: Potential, T0=None) -> float:
    T0 = compute_T0(pot) if T0 is None else T0
    c0 = _inner(pot, pot.v, T0.apply(zeta)) / _norm(pot, pot.v) ** 2
    return float(c0.real) if abs(c0.imag) <= 1e-12 * max(abs(c0), 1.0) else c0


def _moments(zeta, pot: Potential):
    x = pot.grid.points
    f = pot.grid.weights * pot.v * zeta / (8 * PI**2)
    a = x.T @ f
    a_jk = (x * f[:, None]).T @ x
    b = np.trace(a_jk)
    return a, b, 0.5 * (a_jk + a_jk.T)


def _realify(x):
    x = np.asarray(x)
    if np.iscomplexobj(x) and np.all(np.abs(x.imag) <= 1e-12 * max(np.abs(x).max(), 1.0)):
        return x.real
    return x


def asymptotic_coeffs(zeta, pot: Potential, T0=None, tol: float = MEMBERSHIP_TOL):
    """(c0, a, b, A) of the far-field expansion, A = a_jk - (b/2) I."""
    zeta = _check_member(zeta, pot, tol)
    c0 = compute_c0(zeta, pot, T0)
    a, b, a_jk = _moments(zeta, pot)
    A = a_jk - 0.5 * b * np.eye(4)
    return c0, _realify(a), complex(b).real if abs(np.imag(b)) < 1e-12 else b, _realify(A)


def farfield_values(points, zeta, pot: Potential, c0) -> np.ndarray:
    """phi at points off the grid by direct quadrature of the log potential."""
    pts = np.atleast_2d(points)
    f = pot.grid.weights * pot.v * zeta
    dist = np.linalg.norm(pts[:, None, :] - pot.grid.points[None, :, :], axis=2)
    return -c0 - (np.log(dist) @ f) / (8 * PI**2)


def model_values(points, c0, a, A) -> np.ndarray:
    pts = np.atleast_2d(points)
    r2 = np.sum(pts**2, axis=1)
    return -c0 + pts @ a / r2 + np.einsum("ij,jk,ik->i", pts, A, pts) / r2**2


def classify_type(c0, a, A, scale: float = 1.0, threshold: float = TYPE_THRESHOLD) -> str:
    if abs(c0) > threshold * scale:
        return "s"
    if np.linalg.norm(a) > threshold * scale:
        return "p"
    if np.linalg.norm(A) > threshold * scale:
        return "d"
    return "eigenfunction"


def fit_farfield(r, phi_ray, model_ray, max_exponent: float = FIT_EXPONENT_MAX) -> tuple[float, bool]:
    """Least-squares slope of log|phi - model| against log r."""
    r = np.asarray(r, dtype=float)
    res = np.abs(np.asarray(phi_ray) - np.asarray(model_ray))
    scale = max(np.max(np.abs(phi_ray)), np.max(np.abs(model_ray)), 1e-300)
    if np.all(res <= 1e-13 * scale):
        return float("-inf"), True
    res = np.maximum(res, 1e-300)
    slope = float(np.polyfit(np.log(r), np.log(res), 1)[0])
    return slope, slope <= max_exponent


def _tail_decayed(pot: Potential) -> bool:
    outer = pot.grid.r[-1]
    shell = np.abs(pot.V[pot.grid.radii == outer])
    return float(shell.max()) <= DECAY_RTOL * float(np.abs(pot.V).max())


def phi_from_zeta(zeta, pot: Potential, T0=None, tol: float = MEMBERSHIP_TOL,
                  ray_radii=RAY_RADII, direction=RAY_DIRECTION) -> ResonanceFunction:
    """The resonance function Phi(zeta) on the grid and on a far-field ray."""
    zeta = _check_member(zeta, pot, tol)
    T0 = compute_T0(pot) if T0 is None else T0
    c0 = compute_c0(zeta, pot, T0)
    vz = pot.v * zeta
    phi = -c0 + kernel_operator(pot.grid, "N0").apply(vz)
    phi = _realify(phi)
    a, b, a_jk = _moments(zeta, pot)
    a, a_jk = _realify(a), _realify(a_jk)
    b = float(np.real(b)) if abs(np.imag(b)) < 1e-12 else b
    A = a_jk - 0.5 * b * np.eye(4)
    kind = classify_type(c0, a, A, scale=_norm(pot, zeta))

    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    pts = np.outer(ray_radii, direction)
    ray_phi = _realify(farfield_values(pts, zeta, pot, c0))
    ray_model = _realify(model_values(pts, c0, a, A))
    if _tail_decayed(pot):
        exponent, ok = fit_farfield(ray_radii, ray_phi, ray_model)
        note = ""
    else:
        exponent, ok, note = float("nan"), None, "skipped: V not decayed at the grid edge"
    return ResonanceFunction(zeta, phi, c0, a, b, a_jk, A, kind, direction, np.asarray(ray_radii),
                             ray_phi, ray_model, exponent, ok, note)


def inverse_check(phi, pot: Potential, zeta) -> float:
    """|<-w phi, zeta>| / (||w phi|| ||zeta||), insensitive to a global phase."""
    phi = phi.phi if isinstance(phi, ResonanceFunction) else np.asarray(phi)
    wphi = -pot.w * phi
    den = _norm(pot, wphi) * _norm(pot, zeta)
    if den == 0:
        return 0.0
    return abs(_inner(pot, wphi, zeta)) / den


def pde_residual(phi, pot: Potential, bilaplacian_phi=None) -> float:
    """L2 norm of Delta^2 phi + V phi on the grid.

    For a ResonanceFunction Delta^2 phi = v zeta holds exactly, so the residual
    is ||v (zeta + w phi)||.  For plain samples the bilaplacian must be given.
    """
    if isinstance(phi, ResonanceFunction):
        bil = pot.v * phi.zeta
        phi = phi.phi
    else:
        if bilaplacian_phi is None:
            raise ValueError("bilaplacian_phi is required for sampled phi")
        bil = np.asarray(bilaplacian_phi)
        phi = np.asarray(phi)
    return _norm(pot, bil + pot.V * phi)
