"""Quadrature grids on R^4, sampled potentials and engineered resonance fixtures."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import special

PI = float(np.pi)
SPHERE_AREA = 2 * PI**2
ZERO_THRESHOLD = 1e-300
WEIGHT_EXPONENTS = (0, 3, 8, 12, 16)
THEOREM_CASES = {1: 8, 2: 12, 3: 16, 4: 16}


def _cell24() -> np.ndarray:
    pts = []
    for i in range(4):
        for s in (1.0, -1.0):
            e = np.zeros(4)
            e[i] = s
            pts.append(e)
    pts.extend(np.array(s) for s in itertools.product((0.5, -0.5), repeat=4))
    return np.array(pts)


def _cell24_dual() -> np.ndarray:
    pts = []
    for i, j in itertools.combinations(range(4), 2):
        for a, b in itertools.product((1.0, -1.0), repeat=2):
            e = np.zeros(4)
            e[i], e[j] = a, b
            pts.append(e / np.sqrt(2))
    return np.array(pts)


def _cell600() -> np.ndarray:
    phi = (1 + 5**0.5) / 2
    base = (phi / 2, 0.5, 1 / (2 * phi), 0.0)
    pts = list(_cell24())
    for perm in itertools.permutations(range(4)):
        inversions = sum(perm[i] > perm[j] for i in range(4) for j in range(i + 1, 4))
        if inversions % 2:
            continue
        v = [base[perm[k]] for k in range(4)]
        for signs in itertools.product((1.0, -1.0), repeat=4):
            pts.append(np.array(v) * np.array(signs))
    return np.unique(np.round(np.array(pts), 14), axis=0)


# (strength, constructor); strengths are verified in the test suite
_DESIGNS = {
    5: _cell24,
    7: lambda: np.vstack([_cell24(), _cell24_dual()]),
    11: _cell600,
}
MIN_SPHERICAL_ORDER = 6


@lru_cache(maxsize=None)
def spherical_design(order: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Smallest shipped equal-weight design on S^3 of strength >= order."""
    for strength in sorted(_DESIGNS):
        if strength >= order:
            nodes = _DESIGNS[strength]()
            nodes = nodes / np.linalg.norm(nodes, axis=1, keepdims=True)
            weights = np.full(len(nodes), SPHERE_AREA / len(nodes))
            return nodes, weights, strength
    raise ValueError(f"no shipped spherical design of strength {order}")


def design_defect(nodes: np.ndarray, degree: int) -> float:
    """max over 1 <= l <= degree of |mean_{m,m'} U_l(w_m . w_m')|; zero for a design."""
    gram = np.clip(nodes @ nodes.T, -1.0, 1.0)
    return max(abs(special.eval_chebyu(l, gram).mean()) for l in range(1, degree + 1))


@dataclass(frozen=True, eq=False)
class Grid4:
    """Radial Gauss-Jacobi shells times a spherical design.

    Node i = k * n_sph + m sits at r_k * omega_m.  radial_weights integrate
    f(r) r^3 dr exactly for polynomials f of degree 2 n_radial - 1.
    """

    R_max: float
    r: np.ndarray
    radial_weights: np.ndarray
    sph_nodes: np.ndarray
    sph_weights: np.ndarray
    design_degree: int

    @property
    def n_radial(self) -> int:
        return len(self.r)

    @property
    def n_sph(self) -> int:
        return len(self.sph_nodes)

    @property
    def n_nodes(self) -> int:
        return self.n_radial * self.n_sph

    @property
    def points(self) -> np.ndarray:
        return (self.r[:, None, None] * self.sph_nodes[None, :, :]).reshape(-1, 4)

    @property
    def radii(self) -> np.ndarray:
        return np.repeat(self.r, self.n_sph)

    @property
    def weights(self) -> np.ndarray:
        return np.outer(self.radial_weights, self.sph_weights).ravel()

    @property
    def max_harmonic(self) -> int:
        """Largest l for which products of degree-l harmonics are integrated exactly."""
        return self.design_degree // 2

    def integrate(self, values) -> complex:
        return np.sum(self.weights * np.asarray(values))

    def shell_average(self, values) -> np.ndarray:
        """Angular mean of a grid function on every shell."""
        vals = np.asarray(values).reshape(self.n_radial, self.n_sph)
        return vals @ self.sph_weights / SPHERE_AREA


def radial_rule(n: int, R_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi(0, 3) nodes on (0, R_max) with weights for r^3 dr."""
    x, w = special.roots_jacobi(n, 0.0, 3.0)
    r = R_max * (1 + x) / 2
    return r, w * (R_max / 2) ** 4


def build_grid(n_radial: int = 48, R_max: float = 12.0, spherical_order: int = 7) -> Grid4:
    if n_radial < 8:
        raise ValueError("n_radial must be at least 8")
    if R_max <= 0:
        raise ValueError("R_max must be positive")
    if spherical_order < MIN_SPHERICAL_ORDER:
        raise ValueError(f"spherical_order must be at least {MIN_SPHERICAL_ORDER}")
    nodes, weights, strength = spherical_design(spherical_order)
    r, rw = radial_rule(n_radial, R_max)
    return Grid4(float(R_max), r, rw, nodes, weights, strength)


def japanese(x):
    return np.sqrt(1.0 + np.asarray(x) ** 2)


def log_bracket(r):
    """<log r> = 1 + |log r|."""
    with np.errstate(divide="ignore"):
        return 1.0 + np.abs(np.log(np.asarray(r, dtype=float)))


@dataclass(frozen=True, eq=False)
class Potential:
    """A real potential sampled on a grid, with U = sign V, v = |V|^(1/2), w = U v."""

    grid: Grid4
    V: np.ndarray
    name: str = "table"
    profile: Callable | None = None
    q: float = 2.0
    U: np.ndarray = field(init=False, repr=False)
    v: np.ndarray = field(init=False, repr=False)
    w: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        V = np.asarray(self.V)
        if np.iscomplexobj(V):
            if np.any(V.imag != 0):
                raise ValueError("potential must be real")
            V = V.real
        V = V.astype(float)
        if V.shape != (self.grid.n_nodes,):
            raise ValueError("potential must have one value per grid node")
        if not np.all(np.isfinite(V)):
            raise ValueError("potential contains NaN or infinite values")
        if self.q <= 1:
            raise ValueError("q must exceed 1")
        V = np.where(np.abs(V) < ZERO_THRESHOLD, 0.0, V)
        U = np.sign(V)
        v = np.sqrt(np.abs(V))
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", U * v)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.V)

    @property
    def is_radial(self) -> bool:
        vals = self.V.reshape(self.grid.n_radial, self.grid.n_sph)
        return bool(np.allclose(vals, vals[:, :1], rtol=1e-12, atol=1e-300))

    def radial_values(self) -> np.ndarray:
        if not self.is_radial:
            raise ValueError("potential is not radial")
        return self.V.reshape(self.grid.n_radial, self.grid.n_sph)[:, 0].copy()

    def evaluate(self, r) -> np.ndarray:
        """Radial profile at arbitrary radii (built-in families only)."""
        if self.profile is None:
            raise ValueError("potential has no analytic radial profile")
        return self.profile(np.asarray(r, dtype=float))

    @property
    def l1_norm(self) -> float:
        return float(self.grid.integrate(np.abs(self.V)).real)

    def weighted_l1(self, k: int) -> float:
        rad = self.grid.radii
        return float(self.grid.integrate(log_bracket(rad) ** 2 * japanese(rad) ** k * np.abs(self.V)).real)

    def lq_norm(self, q: float | None = None) -> float:
        q = self.q if q is None else q
        return float(self.grid.integrate(np.abs(self.V) ** q).real ** (1 / q))

    def lq_loc_uniform(self, q: float | None = None, radius: float = 2.0) -> float:
        """sup over balls B(c, radius), c in {0} and all grid nodes, of ||V||_{L^q(B)}."""
        q = self.q if q is None else q
        pts = self.grid.points
        centers = np.vstack([np.zeros((1, 4)), pts])
        dens = self.grid.weights * np.abs(self.V) ** q
        best = 0.0
        for chunk in np.array_split(centers, max(1, len(centers) // 512)):
            d2 = ((chunk[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
            best = max(best, float(((d2 <= radius**2) * dens).sum(1).max()))
        return best ** (1 / q)

    def norms(self) -> dict:
        out = {f"log2_japanese{k}_L1": self.weighted_l1(k) for k in WEIGHT_EXPONENTS}
        out["L1"] = self.l1_norm
        out[f"L{self.q:g}"] = self.lq_norm()
        out[f"L{self.q:g}_loc_uniform_r2"] = self.lq_loc_uniform()
        return out


def hypothesis_check(pot: Potential, theorem_case: int, tail_rtol: float = 1e-6) -> dict:
    """Finiteness flags for the weighted norms a theorem case requires.

    A weighted L^1 norm is declared finite when the outer half of the grid
    (R_max/2 < |x| <= R_max) contributes less than tail_rtol of the total;
    otherwise the truncated integral is still growing with R_max.
    """
    if theorem_case not in THEOREM_CASES:
        raise ValueError("theorem_case must be 1, 2, 3 or 4")
    k = THEOREM_CASES[theorem_case]
    g = pot.grid
    rad = g.radii
    dens = g.weights * log_bracket(rad) ** 2 * japanese(rad) ** k * np.abs(pot.V)
    total = float(dens.sum())
    tail = float(dens[rad > g.R_max / 2].sum())
    weighted_finite = total == 0.0 or tail <= tail_rtol * total
    lq = pot.lq_norm()
    return {
        "theorem_case": theorem_case,
        "weight_exponent": k,
        "weighted_L1": total,
        "tail_fraction": 0.0 if total == 0.0 else tail / total,
        "weighted_L1_finite": bool(weighted_finite),
        "Lq_finite": bool(np.isfinite(lq)),
        "all_finite": bool(weighted_finite and np.isfinite(lq)),
    }


def _radial_potential(grid: Grid4, profile: Callable, name: str, q: float = 2.0) -> Potential:
    V = np.repeat(profile(grid.r), grid.n_sph)
    return Potential(grid, V, name=name, profile=profile, q=q)


def gaussian_well(grid: Grid4, depth: float = 0.05, width: float = 1.0, q: float = 2.0) -> Potential:
    """V(x) = -depth * exp(-|x|^2 / width^2)."""
    def profile(r):
        return -depth * np.exp(-((np.asarray(r) / width) ** 2))

    return _radial_potential(grid, profile, f"gaussian(depth={depth:g},width={width:g})", q)


def power_potential(grid: Grid4, power: float = 5.0, strength: float = 1.0, q: float = 2.0) -> Potential:
    """V(x) = strength * <x>^(-power)."""
    def profile(r):
        return strength * japanese(r) ** (-power)

    return _radial_potential(grid, profile, f"power(power={power:g})", q)


def zero_potential(grid: Grid4) -> Potential:
    return _radial_potential(grid, lambda r: np.zeros_like(np.asarray(r, dtype=float)), "zero")


# ---------------------------------------------------------------------------
# engineered resonances: phi = P_l(x) h(r), V = -Delta^2 phi / phi

FIXTURE_KINDS = {
    # kind: (harmonic degree l, harmonic polynomial, radial factor as sympy source)
    "s_wave": (0, lambda x: np.ones(len(x)), "1 + exp(-r**2)"),
    "p_wave": (1, lambda x: x[:, 0], "(1 - exp(-r**2)) / r**2"),
    "d_wave": (2, lambda x: x[:, 0] * x[:, 1], "((1 - exp(-r**2)) / r**2)**2"),
    "eigen": (3, lambda x: x[:, 0] * x[:, 1] * x[:, 2], "((1 - exp(-r**2)) / r**2)**3"),
}
FIXTURE_DPS = 60


@lru_cache(maxsize=None)
def _fixture_functions(kind: str):
    import mpmath
    import sympy as sp

    l, _, src = FIXTURE_KINDS[kind]
    r = sp.symbols("r", positive=True)
    h = sp.sympify(src, locals={"r": r})

    def L(f):
        # Laplacian of P_l(x) f(r) divided by P_l(x), P_l harmonic of degree l
        return sp.diff(f, r, 2) + (3 + 2 * l) * sp.diff(f, r) / r

    bih = L(L(h))
    h_fn = sp.lambdify(r, h, modules="mpmath")
    bih_fn = sp.lambdify(r, bih, modules="mpmath")

    def evaluate(fn, radii):
        radii = np.atleast_1d(np.asarray(radii, dtype=float))
        out = np.empty(radii.shape)
        for i, rv in enumerate(radii.ravel()):
            # r = 0 is a removable singularity; evaluate just off it with extra digits
            dps = FIXTURE_DPS if rv > 1e-3 else 3 * FIXTURE_DPS
            with mpmath.workdps(dps):
                x = mpmath.mpf(rv) if rv > 0 else mpmath.mpf("1e-12")
                out.ravel()[i] = float(fn(x))
        return out

    return (
        lambda rr: evaluate(h_fn, rr),
        lambda rr: evaluate(bih_fn, rr),
        sp.simplify(bih),
        h,
    )


@dataclass(frozen=True, eq=False)
class Fixture:
    """Potential with a known zero-energy solution phi = P_l(x) h(r)."""

    kind: str
    degree: int
    potential: Potential
    phi: np.ndarray
    bilaplacian_phi: np.ndarray
    h: Callable
    bilaplacian_h: Callable
    harmonic: Callable

    @property
    def zeta(self) -> np.ndarray:
        """Kernel vector -w phi of QT0Q."""
        return -self.potential.w * self.phi

    def phi_at(self, points) -> np.ndarray:
        points = np.atleast_2d(points)
        return self.harmonic(points) * self.h(np.linalg.norm(points, axis=1))


def engineered_resonance_fixture(grid: Grid4, kind: str = "s_wave") -> Fixture:
    """V = -Delta^2 phi / phi for phi = P_l(x) h(r), so (Delta^2 + V) phi = 0."""
    if kind not in FIXTURE_KINDS:
        raise ValueError(f"unknown fixture kind {kind!r}")
    degree, harmonic, _ = FIXTURE_KINDS[kind]
    h_fn, bih_fn, _, _ = _fixture_functions(kind)

    def profile(r):
        return -bih_fn(r) / h_fn(r)

    pot = _radial_potential(grid, profile, f"engineered_{kind}")
    pts = grid.points
    ang = harmonic(pts)
    hr = np.repeat(h_fn(grid.r), grid.n_sph)
    bh = np.repeat(bih_fn(grid.r), grid.n_sph)
    return Fixture(kind, degree, pot, ang * hr, ang * bh, h_fn, bih_fn, harmonic)


def sample_potential(defn: dict | str | Path, grid: Grid4) -> Potential:
    """Build a Potential from a JSON-style definition.

    Supported types: gaussian, power, zero, engineered_s (alias of
    engineered with kind s_wave), engineered and table.
    """
    if isinstance(defn, (str, Path)):
        defn = json.loads(Path(defn).read_text())
    kind = defn.get("type")
    q = float(defn.get("q", 2.0))
    if kind == "gaussian":
        return gaussian_well(grid, float(defn.get("depth", 0.05)), float(defn.get("width", 1.0)), q)
    if kind == "power":
        return power_potential(grid, float(defn.get("power", 5.0)), float(defn.get("strength", 1.0)), q)
    if kind == "zero":
        return zero_potential(grid)
    if kind == "engineered_s":
        return engineered_resonance_fixture(grid, "s_wave").potential
    if kind == "engineered":
        return engineered_resonance_fixture(grid, defn.get("kind", "s_wave")).potential
    if kind == "table":
        idx = np.asarray(defn["indices"], dtype=int)
        vals = np.asarray(defn["values"])
        if idx.shape != vals.shape:
            raise ValueError("indices and values must have equal length")
        if np.any(idx < 0) or np.any(idx >= grid.n_nodes):
            raise ValueError("node index out of range for this grid")
        V = np.zeros(grid.n_nodes, dtype=vals.dtype)
        V[idx] = vals
        return Potential(grid, V, name=defn.get("name", "table"), q=q)
    raise ValueError(f"unknown potential type {kind!r}")
