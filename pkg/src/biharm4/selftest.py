"""Oracle suites run by `biharm4 kernels selftest`.

Each suite compares two independent routes and returns a SuiteResult; the
CLI prints the pass matrix and serializes the metrics.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bd
from . import kernels as kn
from . import operators as op

PI = float(np.pi)
DUAL_ROUTE_RTOL = 1e-8
DESCENT_RTOL = 1e-6
BLOCK_RTOL = 1e-10
K1_RTOL = 1e-3
K2_RTOL = 1e-4
W2_RTOL = 1e-3
K_SAMPLE_RADII = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    metrics: dict
    seconds: float = 0.0
    table: list = field(default_factory=list, repr=False)
    columns: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "metrics": self.metrics,
                "seconds": round(self.seconds, 3)}


def random_kernel_points(rng: np.random.Generator, n: int = 200, zr_range=(0.5, 2.0)):
    """z in the closed first quadrant and r > 0 with |z| r in zr_range."""
    r = np.exp(rng.uniform(np.log(0.1), np.log(10.0), n))
    mod = rng.uniform(*zr_range, n) / r
    theta = rng.uniform(0, PI / 2, n)
    return mod * np.exp(1j * theta), r


def kernel_dual_route(rng: np.random.Generator, n: int = 200) -> SuiteResult:
    z, r = random_kernel_points(rng, n)
    ser = kn.green_series(z, r)
    itg = kn.green_integral(z, r)
    rel = np.abs(ser - itg) / np.abs(itg)
    table = [(float(a.real), float(a.imag), float(b), complex(s), complex(i), float(e))
             for a, b, s, i, e in zip(z, r, ser, itg, rel)]
    return SuiteResult("kernel_dual_route", bool(rel.max() <= DUAL_ROUTE_RTOL),
                       {"max_relerr": float(rel.max()), "n": n}, table=table,
                       columns=("lam_re", "lam_im", "r", "series", "integral", "relerr"))


def descent_consistency(radii=(0.5, 1.0, 2.0)) -> SuiteResult:
    errs = {}
    for r in radii:
        for k, v in kn.fit_descent_coefficients(r).rel_errors().items():
            errs[f"{k}@r={r:g}"] = v
    worst = max(errs.values())
    return SuiteResult("descent_consistency", worst <= DESCENT_RTOL, {"max_relerr": worst, **errs})


def _random_matrix(rng, n: int) -> np.ndarray:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return g / np.sqrt(2 * n) + 2 * np.eye(n)


def block_inverses(rng: np.random.Generator, n_instances: int = 100) -> SuiteResult:
    fe, jn = [], []
    for _ in range(n_instances):
        n = int(rng.integers(2, 51))
        A = _random_matrix(rng, n)
        Ainv = np.linalg.inv(A)
        k = int(rng.integers(1, n))
        blocks = op.feshbach_inverse(A[:k, :k], A[:k, k:], A[k:, :k], A[k:, k:]).assemble()
        fe.append(np.linalg.norm(blocks - Ainv) / np.linalg.norm(Ainv))
        m = int(rng.integers(1, n + 1))
        S, _ = np.linalg.qr(rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m)))
        jn.append(np.linalg.norm(op.jn_inverse(A, S) - Ainv) / np.linalg.norm(Ainv))
    worst = max(max(fe), max(jn))
    return SuiteResult("block_inverses", worst <= BLOCK_RTOL,
                       {"feshbach_max": float(max(fe)), "jn_max": float(max(jn)), "n": n_instances})


def k_operator(radii=K_SAMPLE_RADII) -> SuiteResult:
    from . import waveop as wo

    u = wo.TestFunction.bump(1.0, 2.0)
    m = {"K1_max": 0.0, "K2_max": 0.0, "K_split_max": 0.0}
    for r in radii:
        K, K1, K2 = (f(u, r)[0] for f in (wo.K_apply, wo.K1_apply, wo.K2_apply))
        o1, o2 = wo.K1_oracle(u, r), wo.K2_closed(u, r)
        m["K1_max"] = max(m["K1_max"], abs(K1 - o1) / abs(o1))
        m["K2_max"] = max(m["K2_max"], abs(K2 - o2) / abs(o2))
        m["K_split_max"] = max(m["K_split_max"], abs(K - (K1 - K2) / 2) / abs(K))
    ok = m["K1_max"] <= K1_RTOL and m["K2_max"] <= K2_RTOL and m["K_split_max"] <= 1e-10
    return SuiteResult("k_operator", ok, {k: float(v) for k, v in m.items()})


def w2_identity(depth: float = 0.05, a: float = 1.0, stride: int = 6) -> SuiteResult:
    from . import grid as gr
    from . import waveop as wo

    sec = wo.RadialSector.from_potential(gr.gaussian_well(gr.build_grid(16, 8.0), depth=depth))
    u = wo.TestFunction.bump()
    W2a = wo.born_term(2, u, sec, a)[::stride]
    W2b = wo.born_w2_translated(u, sec, sec.r[::stride], a)
    rel = float(np.linalg.norm(W2a - W2b) / np.linalg.norm(W2a))
    return SuiteResult("w2_identity", rel <= W2_RTOL, {"relerr": rel})


def bound_certificates() -> SuiteResult:
    certs = [bd.verify_int_L(), bd.verify_lemma91()] + [bd.verify_R_bounds(j) for j in range(4)] \
        + [bd.verify_2step()]
    m = {c.bound_id: {"C": c.constant, "stability": c.stability_ratio, "passed": c.passed}
         for c in certs}
    return SuiteResult("bound_certificates", all(c.passed for c in certs), m)


QUICK_SUITES = ("kernel_dual_route", "descent_consistency", "block_inverses", "k_operator",
                "bound_certificates")
FULL_SUITES = QUICK_SUITES + ("w2_identity",)


def run_suites(seed: int = 0, quick: bool = False, g2_perturbation: float = 0.0) -> list[SuiteResult]:
    """Run the oracle suites; g2_perturbation scales the G2 coefficient by (1 + value)."""
    rng = np.random.default_rng(seed)
    runners = {
        "kernel_dual_route": lambda: kernel_dual_route(rng),
        "descent_consistency": descent_consistency,
        "block_inverses": lambda: block_inverses(rng),
        "k_operator": k_operator,
        "bound_certificates": bound_certificates,
        "w2_identity": w2_identity,
    }
    out = []
    with kn.perturbed_descent(1, 1.0 + g2_perturbation):
        for name in QUICK_SUITES if quick else FULL_SUITES:
            t = time.perf_counter()
            res = runners[name]()
            out.append(SuiteResult(res.name, res.passed, res.metrics, time.perf_counter() - t,
                                   res.table, res.columns))
    return out
