"""Threshold classification of H = Delta^2 + V at zero energy.

The cascade peels off nested kernels

    S1 = ker QT0Q on range Q
    S2 = ker T1,  T1 = S1 T0 P T0 S1
    S3 = ker T2,  T2 = S2 G2^(v) S2
    S4 = ker T3,  T3 = S3 G4^(v) S3

and stops at the first stage whose operator is invertible.  Rank decisions
compare singular values of the restricted operator with tol times the norm
of the unrestricted one.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import Potential
from .operators import (
    DEFAULT_TOL,
    GAP_FACTOR,
    GapWarning,
    HSOp,
    Proj,
    assemble_M,
    assemble_sandwiched,
    build_PQ,
    compute_T0,
    g0,
    kernel_projection,
    operator_norm,
)
from .resonance import TYPES, phi_from_zeta

REPORT_VERSION = "biharm4.singularity/1"
KINDS = ("Regular", "First", "Second", "Third", "Fourth")
STAGES = ("QT0Q", "T1", "T2", "T3", "T4")
INTERVALS = {
    "Regular": "(1,inf)",
    "First": "(1,inf)",
    "Second": "(1,4)",
    "Third": "(1,2]",
}
INVERSE_COND_MAX = 1e12


@dataclass(frozen=True, eq=False)
class SingularityReport:
    kind: str
    ranks: tuple[int, int, int, int]
    smallest_singular_values: dict
    resonance_counts: dict
    interval: str
    t3_zero: bool | None
    tol: float
    gap_ok: bool = True
    gap_stages: tuple[str, ...] = ()
    candidate_kinds: tuple[str, ...] = ()
    t4_condition: float | None = None
    projections: dict = field(default_factory=dict, repr=False)
    resonances: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        r = self.ranks
        if any(a < b for a, b in zip(r, r[1:])):
            raise ValueError(f"ranks must be weakly decreasing, got {r}")
        if (self.kind == "Regular") != (r[0] == 0):
            raise ValueError("kind is Regular exactly when rank S1 = 0")

    def to_dict(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "kind": self.kind,
            "ranks": {f"S{k + 1}": int(v) for k, v in enumerate(self.ranks)},
            "smallest_singular_values": self.smallest_singular_values,
            "resonance_counts": self.resonance_counts,
            "interval": self.interval,
            "t3_zero": self.t3_zero,
            "tol": self.tol,
            "gap_ok": self.gap_ok,
            "gap_stages": list(self.gap_stages),
            "candidate_kinds": list(self.candidate_kinds or (self.kind,)),
            "t4_condition": self.t4_condition,
        }


def predicted_interval(kind: str, t3_zero: bool | None = None) -> str:
    if kind == "Fourth":
        return "(1,4)" if t3_zero else "(1,2]"
    return INTERVALS[kind]


def theorem_case(kind: str, t3_zero: bool | None = None) -> int:
    """Decay hypothesis case (weight <x>^k) matching a singularity kind."""
    if kind in ("Regular", "First"):
        return 1
    if kind == "Second":
        return 2
    if kind == "Third":
        return 3
    if kind == "Fourth":
        return 4 if t3_zero else 3
    raise ValueError(f"unknown kind {kind!r}")


def _smallest(proj: Proj) -> float | None:
    sig = proj.singular_values
    return float(sig.min()) if sig.size else None


def graded_basis(bases: list[np.ndarray]) -> list[np.ndarray]:
    """Orthonormal pieces of range(S_k) minus range(S_{k+1}), innermost last.

    bases are orthonormal bases of S1 ⊃ S2 ⊃ ...; returns one block per
    nesting level with the complement of the next level inside this one.
    """
    out = []
    for k, Z in enumerate(bases):
        inner = bases[k + 1] if k + 1 < len(bases) else np.zeros((Z.shape[0], 0))
        m = Z.shape[1] - inner.shape[1]
        if m <= 0:
            out.append(np.zeros((Z.shape[0], 0), dtype=Z.dtype))
            continue
        C = Z - inner @ (inner.conj().T @ Z)
        u, _, _ = np.linalg.svd(C, full_matrices=False)
        out.append(u[:, :m])
    return out


def _run(pot: Potential, tol: float, T0: HSOp | None, with_resonances: bool):
    if pot.is_zero:
        raise ValueError("V = 0 has no Birman-Schwinger factorization")
    T0 = compute_T0(pot) if T0 is None else T0
    sw = T0.sqrt_w
    P, Q = build_PQ(pot)
    svals: dict = {s: None for s in STAGES}
    gap_stages = []
    projs = {"P": P, "Q": Q}

    def stage(name, A, E, scale, out_basis=None):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", GapWarning)
            pr = kernel_projection(A, E, sw, tol, scale=scale, out_basis=out_basis)
        if any(issubclass(w.category, GapWarning) for w in caught):
            gap_stages.append(name)
        return pr

    t0_norm = operator_norm(T0)
    S1 = stage("QT0Q", T0, Q.basis, t0_norm)
    svals["QT0Q"] = _smallest(S1)
    projs["S1"] = S1
    ranks = [S1.rank, 0, 0, 0]
    kind, t3_zero, t4_cond = "Regular", None, None
    if S1.rank:
        kind = "First"
        S2 = stage("T1", T0, S1.basis, t0_norm, out_basis=P.basis)
        # T1 = (P T0 S1)^* (P T0 S1), so its singular values are squares
        svals["T1"] = float(np.min(S2.singular_values) ** 2)
        projs["S2"] = S2
        ranks[1] = S2.rank
        if S2.rank:
            kind = "Second"
            G2v = assemble_sandwiched("G2", pot)
            S3 = stage("T2", G2v, S2.basis, operator_norm(G2v))
            svals["T2"] = _smallest(S3)
            projs["S3"] = S3
            ranks[2] = S3.rank
            if S3.rank:
                kind = "Third"
                G4v = assemble_sandwiched("G4", pot)
                S4 = stage("T3", G4v, S3.basis, operator_norm(G4v))
                svals["T3"] = _smallest(S4)
                projs["S4"] = S4
                ranks[3] = S4.rank
                if S4.rank:
                    kind = "Fourth"
                    t3_zero = S4.rank == S3.rank
                    G4lv = assemble_sandwiched("G4l", pot)
                    red = S4.basis.conj().T @ G4lv.mat @ S4.basis
                    sig = np.linalg.svd(red, compute_uv=False)
                    svals["T4"] = float(sig[-1])
                    t4_cond = float(sig[0] / sig[-1]) if sig[-1] > 0 else float("inf")

    counts = {t: 0 for t in TYPES}
    resonances = []
    if with_resonances and ranks[0]:
        bases = [projs[f"S{k + 1}"].basis for k in range(4) if ranks[k]]
        for block in graded_basis(bases):
            for y in block.T:
                res = phi_from_zeta(y / sw, pot, T0=T0, tol=max(tol, 1e-6))
                counts[res.type] += 1
                resonances.append(res)
    return kind, ranks, svals, counts, t3_zero, t4_cond, gap_stages, projs, resonances


def cascade(pot: Potential, tol: float = DEFAULT_TOL, T0: HSOp | None = None,
            with_resonances: bool = True) -> SingularityReport:
    """Classify the threshold behaviour of pot and return a SingularityReport.

    When a rank decision lies inside the factor-10 gap band a GapWarning is
    emitted and the report lists the kinds obtained at both ends of the band.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    T0 = compute_T0(pot) if T0 is None else T0
    kind, ranks, svals, counts, t3_zero, t4_cond, gap_stages, projs, resonances = _run(
        pot, tol, T0, with_resonances)
    candidates: tuple[str, ...] = (kind,)
    if gap_stages:
        warnings.warn(f"ambiguous rank decision at {', '.join(gap_stages)}", GapWarning, stacklevel=2)
        alt = set()
        for t in (tol / np.sqrt(GAP_FACTOR) / 1.01, tol * np.sqrt(GAP_FACTOR) * 1.01):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", GapWarning)
                alt.add(_run(pot, t, T0, False)[0])
        candidates = tuple(k for k in KINDS if k in alt | {kind})
    return SingularityReport(
        kind=kind,
        ranks=tuple(ranks),
        smallest_singular_values=svals,
        resonance_counts=counts,
        interval=predicted_interval(kind, t3_zero),
        t3_zero=t3_zero,
        tol=tol,
        gap_ok=not gap_stages,
        gap_stages=tuple(gap_stages),
        candidate_kinds=candidates,
        t4_condition=t4_cond,
        projections=projs,
        resonances=resonances,
    )


def moment_check(zeta, pot: Potential, order: int, T0: HSOp | None = None) -> dict[str, float]:
    """||T0 zeta|| and |<x^alpha v, zeta>| for |alpha| <= order, keyed by label."""
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    T0 = compute_T0(pot) if T0 is None else T0
    w = pot.grid.weights
    x = pot.grid.points
    zeta = np.asarray(zeta)
    out = {"T0": float(np.sqrt(np.sum(w * np.abs(T0.apply(zeta)) ** 2)))}
    f = w * pot.v * zeta
    out["1"] = float(abs(np.sum(f)))
    if order >= 1:
        for j in range(4):
            out[f"x{j + 1}"] = float(abs(np.sum(x[:, j] * f)))
    if order >= 2:
        for j in range(4):
            for k in range(j, 4):
                out[f"x{j + 1}x{k + 1}"] = float(abs(np.sum(x[:, j] * x[:, k] * f)))
    return out


@dataclass(frozen=True)
class RegularExpansionReport:
    lams: tuple[float, ...]
    identity_errors: tuple[float, ...]
    expansion_errors: tuple[float, ...]
    slope: float
    slope_ok: bool
    L0_singular_values: tuple[float, ...]
    L0_rank: int
    c1: float
    c1_variant: float
    c1_difference: float
    skipped: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def regular_expansion_check(pot: Potential, lams=(0.1, 0.03, 0.01), tol: float = DEFAULT_TOL,
                            T0: HSOp | None = None, slope_target: float = 4.0,
                            slope_band: float = 0.4) -> RegularExpansionReport:
    """Compare M(lam^4)^-1 with D0~(lam) - lam^2 D0~ G2^(v) D0~, D0~ = D0 + h(lam) L0.

    D0 = Q (QT0Q)^-1 Q, h = 1/(g0 + c1) and
    L0 = P - P T0 D0 - D0 T0 P + D0 T0 P T0 D0.
    """
    T0 = compute_T0(pot) if T0 is None else T0
    P, Q = build_PQ(pot)
    E = Q.basis
    red = E.conj().T @ T0.mat @ E
    sig = np.linalg.svd(red, compute_uv=False)
    if sig[-1] <= tol * operator_norm(T0):
        raise ValueError("QT0Q is not invertible on range Q: potential is not regular")
    D0 = E @ np.linalg.solve(red, E.conj().T)
    Pm, T = P.matrix, T0.mat
    vt = P.basis[:, 0]
    L0 = Pm - Pm @ T @ D0 - D0 @ T @ Pm + D0 @ T @ Pm @ T @ D0
    L0_sig = np.linalg.svd(L0, compute_uv=False)
    L0_rank = int(np.sum(L0_sig > tol * L0_sig[0]))

    def c1_with(D):
        qt = Q.matrix @ T @ vt
        return float(np.real(vt.conj() @ T @ vt - qt.conj() @ D @ qt))

    c1 = c1_with(D0)
    # variant: D0 = Q (QT0Q + S1)^-1 Q with S1 the (numerical) kernel projection
    S1 = kernel_projection(T0, E, T0.sqrt_w, tol, scale=operator_norm(T0))
    Z = E.conj().T @ S1.basis
    D0v = E @ np.linalg.solve(red + Z @ Z.conj().T, E.conj().T)
    c1v = c1_with(D0v)

    G2v = assemble_sandwiched("G2", pot).mat
    id_err, exp_err, used, skipped = [], [], [], []
    for lam in lams:
        h = 1.0 / (g0(lam, pot) + c1)
        A = T + g0(lam, pot) * Pm
        Dt = D0 + h * L0
        id_err.append(float(np.linalg.norm(np.linalg.inv(A) - Dt)))
        M = assemble_M(lam, pot).mat
        sM = np.linalg.svd(M, compute_uv=False)
        if sM[0] / sM[-1] > INVERSE_COND_MAX:
            skipped.append(f"lam={lam:g}: M ill-conditioned (cond {sM[0] / sM[-1]:.2e})")
            continue
        approx = Dt - lam**2 * Dt @ G2v @ Dt
        exp_err.append(float(np.linalg.norm(np.linalg.inv(M) - approx)))
        used.append(lam)
    if len(used) >= 2:
        slope = float(np.polyfit(np.log(used), np.log(exp_err), 1)[0])
    else:
        slope = float("nan")
    return RegularExpansionReport(
        lams=tuple(float(x) for x in lams),
        identity_errors=tuple(id_err),
        expansion_errors=tuple(exp_err),
        slope=slope,
        slope_ok=bool(abs(slope - slope_target) <= slope_band),
        L0_singular_values=tuple(float(s) for s in L0_sig[:4]),
        L0_rank=L0_rank,
        c1=c1,
        c1_variant=c1v,
        c1_difference=abs(c1 - c1v),
        skipped=tuple(skipped),
    )
