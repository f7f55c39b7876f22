"""Hilbert-Schmidt discretization of the sandwiched resolvent kernels.

Integral operators with kernels kappa(|x - y|) are discretized by splitting
angle and radius.  On S^3 a zonal kernel acts diagonally on degree-l
harmonics with eigenvalue mu_l(r, s) = 2 pi^2 a_l(r, s) / (l + 1), where a_l
is the Chebyshev-U coefficient of kappa in t = cos(angle).  The a_l are known
in closed form for d^{2n} and d^{2n} log d, and for the resolvent kernel via
the Gegenbauer addition theorem.  The radial part is a Galerkin projection on
the Lagrange basis at the Gauss-Jacobi shells, integrated over the two
triangles r < s and r > s so that the kink at r = s is never crossed.

Operators are stored in orthonormal coordinates y = sqrt(w) f, where w are the
grid weights, so that the Euclidean inner product is the L^2 inner product
and the Frobenius norm is the Hilbert-Schmidt norm.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla
from scipy import special

from . import kernels as kn
from .grid import Grid4, Potential

PI = float(np.pi)
CALR_SERIES_TERMS = 14
DEFAULT_TOL = 1e-7
GAP_FACTOR = 10.0
HS_BLOWUP = 1e12
KERNEL_IDS = ("N0", "G2", "G4", "G4l")


class NotInvertible(Exception):
    """Raised when a block or reduced operator is numerically singular."""

    def __init__(self, message: str, smallest_singular_value: float, reduced=None):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value
        self.reduced = reduced


class GapWarning(UserWarning):
    """Singular values too close to the rank threshold for a clean decision."""


# ---------------------------------------------------------------------------
# Chebyshev-U coefficients of zonal kernels


def _times_d2(c: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Multiply U-series coefficients by d^2 = A - B (2t), using 2t U_k = U_{k+1} + U_{k-1}."""
    shifted = np.zeros_like(c)
    shifted[1:] += c[:-1]
    shifted[:-1] += c[1:]
    return A * c - B * shifted


def _log_coeffs(r: np.ndarray, s: np.ndarray, n_coef: int) -> np.ndarray:
    """U-coefficients of log |r w - s e| for l = 0 .. n_coef - 1."""
    big = np.maximum(r, s)
    rho = np.minimum(r, s) / big
    c = np.empty((n_coef,) + np.shape(r))
    c[0] = np.log(big) + rho**2 / 4
    for l in range(1, n_coef):
        c[l] = -(rho**l) / (2 * l) + rho ** (l + 2) / (2 * (l + 2))
    return c


def _power_coeffs(n: int, r, s, n_coef: int) -> np.ndarray:
    c = np.zeros((n_coef + n,) + np.shape(r))
    c[0] = 1.0
    A, B = r * r + s * s, r * s
    for _ in range(n):
        c = _times_d2(c, A, B)
    return c[:n_coef]


def _power_log_coeffs(n: int, r, s, n_coef: int) -> np.ndarray:
    c = _log_coeffs(r, s, n_coef + n)
    A, B = r * r + s * s, r * s
    for _ in range(n):
        c = _times_d2(c, A, B)
    return c[:n_coef]


def _to_mu(coeffs: np.ndarray) -> np.ndarray:
    l = np.arange(len(coeffs)).reshape((-1,) + (1,) * (coeffs.ndim - 1))
    return 2 * PI**2 * coeffs / (l + 1)


def descent_mu(kernel_id: str, r, s, L: int) -> np.ndarray:
    """Angular eigenvalues mu_l, l <= L, of the descent kernels N0, G2, G4, G4l."""
    if kernel_id == "N0":
        t = kn.descent_term(0)
        return _to_mu(t.log_coeff * _log_coeffs(r, s, L + 1))
    if kernel_id == "G2":
        t = kn.descent_term(1)
        return _to_mu(t.poly_coeff * _power_coeffs(1, r, s, L + 1))
    if kernel_id == "G4":
        t = kn.descent_term(2)
        return _to_mu(t.poly_coeff.real * _power_coeffs(2, r, s, L + 1))
    if kernel_id == "G4l":
        t = kn.descent_term(2)
        return _to_mu(t.log_coeff * _power_log_coeffs(2, r, s, L + 1))
    raise ValueError(f"unknown kernel id {kernel_id!r}")


def _calR_mu_series(lam: float, r, s, L: int) -> np.ndarray:
    n_terms = CALR_SERIES_TERMS
    n_coef = L + 1
    A, B = r * r + s * s, r * s
    poly = np.zeros((n_coef + n_terms,) + np.shape(r))
    poly[0] = 1.0
    logp = _log_coeffs(r, s, n_coef + n_terms)
    total = np.zeros((n_coef,) + np.shape(r), dtype=complex)
    for n in range(n_terms):
        t = kn.descent_term(n)
        term = t.scalar(lam) * t.poly_coeff * poly[:n_coef]
        if t.has_log:
            term = term + t.log_coeff * logp[:n_coef]
        total += lam ** (2 * n) * term
        poly = _times_d2(poly, A, B)
        logp = _times_d2(logp, A, B)
    return _to_mu(total)


def _calR_mu_bessel(lam: float, r, s, L: int) -> np.ndarray:
    big = np.maximum(r, s)
    small = np.minimum(r, s)
    a, b = lam * big, lam * small
    out = np.empty((L + 1,) + np.shape(r), dtype=complex)
    for l in range(L + 1):
        nu = l + 1
        osc = 0.5j * PI * special.hankel1(nu, a) * special.jv(nu, b)
        dec = special.kve(nu, a) * special.ive(nu, b) * np.exp(-(a - b))
        out[l] = (osc - dec) / (2 * lam * lam * big * small)
    return out


def calR_mu(lam: float, r, s, L: int, regime: kn.KernelRegime = kn.DEFAULT_REGIME) -> np.ndarray:
    """Angular eigenvalues of the resolvent kernel calR(lam, |x - y|)."""
    r, s = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(s, dtype=float))
    use_series = regime.use_series(lam * np.maximum(r, s))
    out = np.empty((L + 1,) + r.shape, dtype=complex)
    if np.any(use_series):
        out[:, use_series] = _calR_mu_series(lam, r[use_series], s[use_series], L)
    if np.any(~use_series):
        out[:, ~use_series] = _calR_mu_bessel(lam, r[~use_series], s[~use_series], L)
    return out


# ---------------------------------------------------------------------------
# radial Galerkin quadrature


def lagrange_matrix(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """E[p, k] = l_k(x_p) for the Lagrange basis on `nodes` (barycentric form)."""
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    bw = 1.0 / np.prod(diff * (2.0 / (nodes.max() - nodes.min() + 1e-300)), axis=1)
    dx = x[:, None] - nodes[None, :]
    exact = dx == 0
    dx[exact] = 1.0
    terms = bw[None, :] / dx
    E = terms / terms.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    E[rows] = exact[rows].astype(float)
    return E


@dataclass(frozen=True, eq=False)
class RadialGalerkin:
    """Quadrature over the triangle r < s for Galerkin matrices on the shells."""

    grid: Grid4
    n_quad: int

    @cached_property
    def _rule(self):
        R = self.grid.R_max
        x, w = np.polynomial.legendre.leggauss(self.n_quad)
        s = R * (x + 1) / 2
        sw = w * R / 2
        t = (x + 1) / 2
        tw = w / 2
        r_pts = (s[:, None] * t[None, :]).ravel()
        s_pts = np.repeat(s, self.n_quad)
        wts = (sw[:, None] * tw[None, :] * s[:, None]).ravel() * r_pts**3 * s_pts**3
        Er = lagrange_matrix(self.grid.r, r_pts)
        Es = lagrange_matrix(self.grid.r, s)
        return r_pts, s_pts, wts, Er, Es

    @property
    def points(self) -> tuple[np.ndarray, np.ndarray]:
        r_pts, s_pts, *_ = self._rule
        return r_pts, s_pts

    def orthonormal_matrix(self, mu: np.ndarray) -> np.ndarray:
        """R[k, j] = int int l_k(r) l_j(s) mu(r, s) r^3 s^3 / sqrt(rho_k rho_j)."""
        _, _, wts, Er, Es = self._rule
        n, nq = self.grid.n_radial, self.n_quad
        Y = (Er * (wts * mu)[:, None]).reshape(nq, nq, n).sum(axis=1)
        A = Y.T @ Es
        sq = np.sqrt(self.grid.radial_weights)
        return (A + A.T) / np.outer(sq, sq)


@lru_cache(maxsize=16)
def radial_galerkin(grid: Grid4, n_quad: int | None = None) -> RadialGalerkin:
    return RadialGalerkin(grid, n_quad or grid.n_radial + 32)


def zonal_matrices(grid: Grid4) -> list[np.ndarray]:
    """Orthonormal-coordinate projectors onto degree-l harmonics, l <= max_harmonic."""
    gram = np.clip(grid.sph_nodes @ grid.sph_nodes.T, -1.0, 1.0)
    sw = np.sqrt(grid.sph_weights)
    return [
        (l + 1) / (2 * PI**2) * special.eval_chebyu(l, gram) * np.outer(sw, sw)
        for l in range(grid.max_harmonic + 1)
    ]


def radial_blocks(grid: Grid4, mu_fn, n_quad: int | None = None) -> list[np.ndarray]:
    """Radial Galerkin blocks R_l for every resolved harmonic degree l."""
    rg = radial_galerkin(grid, n_quad)
    r_pts, s_pts = rg.points
    mu = mu_fn(r_pts, s_pts, grid.max_harmonic)
    return [rg.orthonormal_matrix(mu[l]) for l in range(grid.max_harmonic + 1)]


def full_operator(grid: Grid4, blocks: list[np.ndarray]) -> np.ndarray:
    Z = zonal_matrices(grid)
    return sum(np.kron(Rl, Zl) for Rl, Zl in zip(blocks, Z))


# ---------------------------------------------------------------------------
# operators and projections


@dataclass(frozen=True, eq=False)
class HSOp:
    """Dense operator on grid functions, stored in orthonormal coordinates.

    Acting on plain node values f it is f -> W^{-1/2} mat W^{1/2} f, which is
    the matrix A_ij w_j of the kernel form (Af)(x_i) = sum_j A_ij w_j f(x_j).
    """

    mat: np.ndarray
    sqrt_w: np.ndarray

    @classmethod
    def from_kernel(cls, kernel_matrix: np.ndarray, weights: np.ndarray) -> "HSOp":
        sw = np.sqrt(weights)
        return cls(sw[:, None] * kernel_matrix * sw[None, :], sw)

    @classmethod
    def identity(cls, weights: np.ndarray) -> "HSOp":
        return cls(np.eye(len(weights)), np.sqrt(weights))

    @classmethod
    def diagonal(cls, values: np.ndarray, weights: np.ndarray) -> "HSOp":
        return cls(np.diag(values), np.sqrt(weights))

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    @cached_property
    def hs_norm(self) -> float:
        return float(np.linalg.norm(self.mat))

    @property
    def values_matrix(self) -> np.ndarray:
        return self.mat / self.sqrt_w[:, None] * self.sqrt_w[None, :]

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.mat @ (self.sqrt_w * f) / self.sqrt_w

    def adjoint(self) -> "HSOp":
        return HSOp(self.mat.conj().T, self.sqrt_w)

    def sandwich(self, left: np.ndarray, right: np.ndarray | None = None) -> "HSOp":
        right = left if right is None else right
        return HSOp(left[:, None] * self.mat * right[None, :], self.sqrt_w)

    def to_coords(self, f: np.ndarray) -> np.ndarray:
        return self.sqrt_w * f

    def from_coords(self, y: np.ndarray) -> np.ndarray:
        return y / self.sqrt_w

    def __add__(self, other: "HSOp") -> "HSOp":
        return HSOp(self.mat + other.mat, self.sqrt_w)

    def __sub__(self, other: "HSOp") -> "HSOp":
        return HSOp(self.mat - other.mat, self.sqrt_w)

    def __matmul__(self, other: "HSOp") -> "HSOp":
        return HSOp(self.mat @ other.mat, self.sqrt_w)

    def __mul__(self, c) -> "HSOp":
        return HSOp(c * self.mat, self.sqrt_w)

    __rmul__ = __mul__

    def dump(self, path: str | Path) -> None:
        """Row-major complex128 values matrix after a one-line JSON header, then weights."""
        path = Path(path)
        vm = np.ascontiguousarray(self.values_matrix, dtype=np.complex128)
        header = {"format": "hsop", "version": 1, "n": self.n, "dtype": "complex128", "order": "C",
                  "trailer": "float64 weights"}
        with path.open("wb") as fh:
            fh.write((json.dumps(header) + "\n").encode())
            fh.write(vm.tobytes(order="C"))
            fh.write(np.ascontiguousarray(self.sqrt_w**2, dtype=np.float64).tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "HSOp":
        raw = Path(path).read_bytes()
        head, _, body = raw.partition(b"\n")
        header = json.loads(head)
        n = header["n"]
        vm = np.frombuffer(body[: 16 * n * n], dtype=np.complex128).reshape(n, n)
        w = np.frombuffer(body[16 * n * n:], dtype=np.float64)
        sw = np.sqrt(w)
        return cls(sw[:, None] * vm / sw[None, :], sw)


@dataclass(frozen=True, eq=False)
class Proj:
    """Orthogonal projection given by an orthonormal basis in orthonormal coordinates."""

    basis: np.ndarray
    sqrt_w: np.ndarray
    tol: float = 0.0
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    scale: float = 1.0
    gap_ok: bool = True
    rank_band: tuple[int, int] = (0, 0)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @cached_property
    def op(self) -> HSOp:
        return HSOp(self.basis @ self.basis.conj().T, self.sqrt_w)

    @property
    def matrix(self) -> np.ndarray:
        return self.op.mat

    def vectors(self) -> np.ndarray:
        """Basis vectors as plain grid values (columns)."""
        return self.basis / self.sqrt_w[:, None]


def _orthonormal_complement(basis: np.ndarray, n: int) -> np.ndarray:
    if basis.shape[1] == 0:
        return np.eye(n)
    return sla.null_space(basis.conj().T)


def build_PQ(pot: Potential) -> tuple[Proj, Proj]:
    """P = v~ (x) v~ with v~ = v / ||v||_2 and Q = 1 - P on L^2(supp V).

    Nodes with V = 0 carry no Birman-Schwinger data (v = 0 there), so Q is
    taken inside the span of the support nodes; otherwise each such node
    would add a spurious kernel vector to QT0Q.
    """
    if pot.is_zero:
        raise ValueError("P is undefined for V = 0")
    sw = np.sqrt(pot.grid.weights)
    y = sw * pot.v
    y = y / np.linalg.norm(y)
    P = Proj(y[:, None], sw, rank_band=(1, 1))
    support = np.flatnonzero(pot.v != 0)
    Qb = np.zeros((len(y), support.size - 1))
    Qb[support] = _orthonormal_complement(y[support, None], support.size)
    Q = Proj(Qb, sw, rank_band=(Qb.shape[1], Qb.shape[1]))
    return P, Q


def kernel_projection(
    A: np.ndarray | HSOp,
    range_basis: np.ndarray,
    sqrt_w: np.ndarray,
    tol: float = DEFAULT_TOL,
    scale: float | None = None,
    out_basis: np.ndarray | None = None,
) -> Proj:
    """Projection onto the kernel of A restricted to span(range_basis).

    The reduced matrix is F^* A E with F = out_basis (default E).  When F has
    fewer columns than E the missing singular values are taken as zero.
    Singular values are compared with tol * scale; scale defaults to the
    largest of them.  A decision is ambiguous (GapWarning) when some singular
    value falls inside the factor-10 band [tol/sqrt10, tol*sqrt10].
    """
    mat = A.mat if isinstance(A, HSOp) else np.asarray(A)
    E = range_basis
    F = E if out_basis is None else out_basis
    if E.shape[1] == 0:
        return Proj(E, sqrt_w, tol, np.zeros(0), 1.0)
    red = F.conj().T @ (mat @ E)
    _, sig, vh = np.linalg.svd(red, full_matrices=True)
    sig = np.concatenate([sig, np.zeros(E.shape[1] - sig.size)])
    if scale is None:
        scale = float(sig[0]) if sig[0] > 0 else 1.0
    rel = sig / scale
    in_kernel = rel <= tol
    lo = int(np.sum(rel <= tol / np.sqrt(GAP_FACTOR)))
    hi = int(np.sum(rel <= tol * np.sqrt(GAP_FACTOR)))
    gap_ok = lo == hi
    if not gap_ok:
        warnings.warn(
            f"ambiguous singular-value gap: kernel rank between {lo} and {hi} at tol={tol:g}",
            GapWarning,
            stacklevel=2,
        )
    null = vh[in_kernel].conj().T
    basis = E @ null
    if basis.shape[1]:
        basis, _ = np.linalg.qr(basis)
    return Proj(basis, sqrt_w, tol, sig, scale, gap_ok, (lo, hi))


def operator_norm(A: np.ndarray | HSOp) -> float:
    """Largest singular value, by a Lanczos estimate for large matrices."""
    mat = A.mat if isinstance(A, HSOp) else np.asarray(A)
    if min(mat.shape) <= 64:
        return float(np.linalg.norm(mat, 2))
    return float(spla.svds(mat, k=1, return_singular_vectors=False, random_state=0)[0])


# ---------------------------------------------------------------------------
# assembly


def _require_nonzero(pot: Potential):
    if pot.is_zero:
        raise ValueError("sandwiched operators need a nonzero potential")


@lru_cache(maxsize=8)
def kernel_operator(grid: Grid4, kernel_id: str) -> HSOp:
    """Unsandwiched descent kernel N0, G2, G4 or G4l as an operator on the grid."""
    blocks = radial_blocks(grid, lambda r, s, L: descent_mu(kernel_id, r, s, L))
    return HSOp(full_operator(grid, blocks), np.sqrt(grid.weights))


def resolvent_operator(grid: Grid4, lam: float, regime: kn.KernelRegime = kn.DEFAULT_REGIME) -> HSOp:
    """Free resolvent R0(lam^4) as an operator on the grid."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    blocks = radial_blocks(grid, lambda r, s, L: calR_mu(lam, r, s, L, regime))
    return HSOp(full_operator(grid, blocks), np.sqrt(grid.weights))


def assemble_sandwiched(kernel_id: str, pot: Potential) -> HSOp:
    """M_v kappa M_v for kappa in {N0, G2, G4, G4l}."""
    if kernel_id not in KERNEL_IDS:
        raise ValueError(f"unknown kernel id {kernel_id!r}")
    _require_nonzero(pot)
    op = kernel_operator(pot.grid, kernel_id).sandwich(pot.v)
    if not np.isfinite(op.hs_norm) or op.hs_norm > HS_BLOWUP:
        raise ValueError(f"{kernel_id} sandwich has non-integrable blowup (HS norm {op.hs_norm:g})")
    return op


def compute_T0(pot: Potential) -> HSOp:
    """T0 = M_U + M_v N0 M_v."""
    N0v = assemble_sandwiched("N0", pot)
    return HSOp(np.diag(pot.U) + N0v.mat.real, N0v.sqrt_w)


def g0(lam: float, pot: Potential) -> complex:
    """g0(lam) = ||V||_1 tilde_g_0(lam)."""
    return pot.l1_norm * kn.tilde_g(0, lam)


def assemble_M(lam: float, pot: Potential, regime: kn.KernelRegime = kn.DEFAULT_REGIME) -> HSOp:
    """M(lam^4) = M_U + M_v R0(lam^4) M_v."""
    if lam <= 0:
        raise ValueError("lam must be positive; use compute_T0 at lam = 0")
    if pot.is_zero:
        return HSOp(np.zeros((pot.grid.n_nodes,) * 2, dtype=complex), np.sqrt(pot.grid.weights))
    R = resolvent_operator(pot.grid, lam, regime).sandwich(pot.v)
    return HSOp(np.diag(pot.U).astype(complex) + R.mat, R.sqrt_w)


def descent_M(lam: float, pot: Potential, order: int = 2) -> HSOp:
    """T0 + g0 P, plus lam^2 G2^(v) (order >= 1), plus lam^4 (g~2 G4^(v) + G4l^(v)) (order >= 2)."""
    T0 = compute_T0(pot)
    P, _ = build_PQ(pot)
    out = T0.mat + g0(lam, pot) * P.matrix
    if order >= 1:
        out = out + lam**2 * assemble_sandwiched("G2", pot).mat
    if order >= 2:
        out = out + lam**4 * (
            kn.tilde_g(2, lam) * assemble_sandwiched("G4", pot).mat + assemble_sandwiched("G4l", pot).mat
        )
    return HSOp(out, T0.sqrt_w)


# ---------------------------------------------------------------------------
# block inversion


@dataclass(frozen=True)
class FeshbachBlocks:
    b11: np.ndarray
    b12: np.ndarray
    b21: np.ndarray
    b22: np.ndarray
    cond_a22: float

    def assemble(self) -> np.ndarray:
        return np.block([[self.b11, self.b12], [self.b21, self.b22]])


def _smallest_sv(a: np.ndarray) -> tuple[float, float]:
    sig = np.linalg.svd(a, compute_uv=False)
    return float(sig[-1]), float(sig[0])


def feshbach_inverse(a11, a12, a21, a22, rcond: float = 1e-12) -> FeshbachBlocks:
    """Blockwise inverse through the Schur complement d = (a11 - a12 a22^-1 a21)^-1."""
    a11, a12, a21, a22 = (np.atleast_2d(np.asarray(x)) for x in (a11, a12, a21, a22))
    smin, smax = _smallest_sv(a22)
    if smin <= rcond * smax:
        raise NotInvertible("a22 is singular", smin)
    a22inv = np.linalg.inv(a22)
    schur = a11 - a12 @ a22inv @ a21
    smin_d, smax_d = _smallest_sv(schur)
    if smin_d <= rcond * max(smax_d, smax):
        raise NotInvertible("Schur complement is singular", smin_d, schur)
    d = np.linalg.inv(schur)
    return FeshbachBlocks(
        b11=d,
        b12=-d @ a12 @ a22inv,
        b21=-a22inv @ a21 @ d,
        b22=a22inv @ a21 @ d @ a12 @ a22inv + a22inv,
        cond_a22=smax / smin,
    )


def jn_inverse(A, S, rcond: float = 1e-12) -> np.ndarray:
    """Inverse of A through the projection S.

    A^-1 = (A+S)^-1 + (A+S)^-1 S B^-1 S (A+S)^-1 with B = S - S (A+S)^-1 S
    inverted on range(S).  S may be a Proj or an orthonormal basis matrix.
    """
    mat = A.mat if isinstance(A, HSOp) else np.atleast_2d(np.asarray(A))
    basis = S.basis if isinstance(S, Proj) else np.atleast_2d(np.asarray(S))
    Smat = basis @ basis.conj().T
    AS = mat + Smat
    smin, smax = _smallest_sv(AS)
    if smin <= rcond * smax:
        raise ValueError("precondition violated: A + S is not invertible")
    ASinv = np.linalg.inv(AS)
    B = np.eye(basis.shape[1]) - basis.conj().T @ ASinv @ basis
    if B.size == 0:
        return ASinv
    bmin, _ = _smallest_sv(B)
    if bmin <= rcond:
        raise NotInvertible("reduced operator B is singular on range(S)", bmin, B)
    left = ASinv @ basis
    right = basis.conj().T @ ASinv
    return ASinv + left @ np.linalg.solve(B, right)
