"""Command line front end: classify, resonance, waveop, bounds, kernels selftest, report.

Exit codes: 0 clean, 2 ambiguous rank decision (GapWarning), 1 runtime error,
64 malformed invocation or configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

SCHEMA_VERSION = "biharm4.cli/1"
EXIT_OK, EXIT_ERROR, EXIT_GAP, EXIT_USAGE = 0, 1, 2, 64
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")
DEFAULT_POTENTIAL = {"type": "gaussian", "depth": 0.05, "width": 1.0}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    n_radial: int = 48
    r_max: float = 12.0
    sph_order: int = 7
    potential: dict | str = field(default_factory=lambda: dict(DEFAULT_POTENTIAL))
    svd_tol: float = 1e-7
    cutoff_a: float = 1.0
    born_order: int = 3
    probe_p: tuple[float, ...] = (1.5, 2.0, 3.0, 6.0)
    wave_n_radial: int = 96
    wave_r_max: float = 16.0
    out_dir: str | None = None
    seed: int = 0
    threads: int | None = None
    version: str = SCHEMA_VERSION

    def __post_init__(self):
        if self.version != SCHEMA_VERSION:
            raise UsageError(f"config version {self.version!r} does not match {SCHEMA_VERSION!r}")
        if self.svd_tol <= 0:
            raise UsageError("svd_tol must be positive")
        if self.cutoff_a <= 0:
            raise UsageError("cutoff_a must be positive")
        if self.n_radial < 2 or self.wave_n_radial < 2 or self.r_max <= 0 or self.wave_r_max <= 0:
            raise UsageError("grid sizes must be positive")
        if self.born_order not in (1, 2, 3):
            raise UsageError("born_order must be 1, 2 or 3")
        if any(p < 1 for p in self.probe_p):
            raise UsageError("probe exponents must be >= 1")
        if self.threads is not None and self.threads < 1:
            raise UsageError("threads must be >= 1")

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise UsageError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "probe_p" in data:
            data["probe_p"] = tuple(float(p) for p in data["probe_p"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# serialization


def _jsonable(obj):
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and obj != obj:
        return None
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2, allow_nan=True) + "\n"


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(float(x)) if not isinstance(x, str) else x for x in row])
    return buf.getvalue()


class Output:
    """JSON goes to <out>/<name>.json or stdout; CSV tables only to the out directory."""

    def __init__(self, out_dir: str | None):
        self.dir = Path(out_dir) if out_dir else None
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)

    def json(self, name: str, doc: dict):
        text = dumps(doc)
        if self.dir:
            (self.dir / f"{name}.json").write_text(text)
        else:
            sys.stdout.write(text)

    def csv(self, name: str, columns, rows):
        if self.dir:
            (self.dir / f"{name}.csv").write_text(_csv_text(columns, rows))


# ---------------------------------------------------------------------------
# commands


def _potential(cfg: RunConfig):
    from . import grid as gr

    grid = gr.build_grid(cfg.n_radial, cfg.r_max, cfg.sph_order)
    defn = cfg.potential
    if isinstance(defn, str) and not Path(defn).exists():
        raise FileNotFoundError(f"potential file not found: {defn}")
    return gr.sample_potential(defn, grid)


def _classify(cfg: RunConfig):
    from .classify import cascade
    from .operators import GapWarning

    pot = _potential(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GapWarning)
        report = cascade(pot, cfg.svd_tol)
    return pot, report


def _envelope(cmd: str, cfg: RunConfig, body: dict) -> dict:
    # out_dir and threads do not change results; leaving them out keeps reruns byte-identical
    conf = {k: v for k, v in asdict(cfg).items() if k not in ("out_dir", "threads")}
    return {"version": SCHEMA_VERSION, "command": cmd, "config": conf, **body}


def cmd_classify(cfg: RunConfig, out: Output) -> int:
    _, report = _classify(cfg)
    out.json("classify", _envelope("classify", cfg, {"report": report.to_dict()}))
    return EXIT_OK if report.gap_ok else EXIT_GAP


def cmd_resonance(cfg: RunConfig, out: Output) -> int:
    _, report = _classify(cfg)
    docs = []
    for i, res in enumerate(report.resonances):
        docs.append(res.to_dict())
        out.csv(f"resonance_{i}_ray", ("r", "phi", "model"),
                [(r, complex(p).real, complex(m).real) for r, p, m in res.ray_table()])
    out.json("resonance", _envelope("resonance", cfg, {
        "kind": report.kind, "resonance_counts": report.resonance_counts, "resonances": docs}))
    return EXIT_OK if report.gap_ok else EXIT_GAP


def cmd_waveop(cfg: RunConfig, out: Output) -> int:
    import numpy as np

    from . import waveop as wo

    pot = _potential(cfg)
    sec = wo.RadialSector.from_potential(pot, cfg.wave_n_radial, cfg.wave_r_max)
    u = wo.TestFunction.bump()
    a = cfg.cutoff_a
    born = wo.born_terms(u, sec, cfg.born_order, a)
    norms = [sec.norm(w) for w in born]
    base = u.multiply(lambda k: wo.chi_ge(k, a)).radial_values(sec.r)
    stat = wo.stationary_wave_op(u, sec, a)
    # Born partial sum without its last term, compared against that term's size
    series = base.astype(complex)
    for n, w in enumerate(born[:-1], start=1):
        series = series + (-1) ** n * w
    probe = wo.lp_probe(sec, cfg.probe_p, u=u, a=a)
    summary = {
        "born_norms": norms,
        "born_ratios": [norms[k + 1] / norms[k] if norms[k] else None for k in range(len(norms) - 1)],
        "stationary_norm_ratio": sec.norm(stat) / sec.norm(base),
        "stationary_vs_born_partial_sum": sec.norm(stat - series),
        "last_born_norm": norms[-1],
        "cutoff_a": a,
        "test_function_support": [u.alpha, u.beta],
        "lp_probe": [{"p": r.p, "scale": r.s, "ratio": r.ratio} for r in probe],
    }
    cols = ["r", "u"] + [f"W{n}_re" for n in range(1, len(born) + 1)] + \
        [f"W{n}_im" for n in range(1, len(born) + 1)] + ["Wminus_re", "Wminus_im"]
    rows = np.column_stack([sec.r, base.real] + [w.real for w in born] + [w.imag for w in born]
                           + [stat.real, stat.imag])
    out.csv("waveop_nodes", cols, rows)
    out.json("waveop", _envelope("waveop", cfg, {"summary": summary}))
    return EXIT_OK


def cmd_bounds(cfg: RunConfig, out: Output) -> int:
    from . import bounds as bd

    certs = [bd.verify_int_L(cfg.cutoff_a), bd.verify_lemma91()] + \
        [bd.verify_R_bounds(j) for j in range(4)] + [bd.verify_2step()]
    out.json("bounds", _envelope("bounds", cfg, {
        "passed": all(c.passed for c in certs), "certificates": [c.to_dict() for c in certs]}))
    return EXIT_OK if all(c.passed for c in certs) else EXIT_ERROR


def cmd_selftest(cfg: RunConfig, out: Output, quick: bool, g2_error: float) -> int:
    from .selftest import run_suites

    results = run_suites(cfg.seed, quick=quick, g2_perturbation=g2_error)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<22} {r.seconds:7.2f}s", file=sys.stderr)
        if r.table:
            out.csv(r.name, r.columns, [
                [x for v in row for x in ((v.real, v.imag) if isinstance(v, complex) else (v,))]
                for row in r.table])
    out.json("selftest", {"version": SCHEMA_VERSION, "command": "kernels selftest", "seed": cfg.seed,
                          "quick": quick, "g2_perturbation": g2_error,
                          "passed": all(r.passed for r in results),
                          "suites": [r.to_dict() for r in results]})
    return EXIT_OK if all(r.passed for r in results) else EXIT_ERROR


def cmd_report(cfg: RunConfig, out: Output) -> int:
    from .classify import theorem_case
    from .grid import hypothesis_check

    pot, report = _classify(cfg)
    case = theorem_case(report.kind, report.t3_zero)
    out.json("report", _envelope("report", cfg, {
        "classification": report.to_dict(),
        "resonances": [r.to_dict() for r in report.resonances],
        "hypotheses": hypothesis_check(pot, case),
    }))
    return EXIT_OK if report.gap_ok else EXIT_GAP


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _probe_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad exponent list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("global")
    g.add_argument("--config", default=argparse.SUPPRESS, help="JSON RunConfig file")
    g.add_argument("--out", default=argparse.SUPPRESS, help="output directory (JSON to stdout if absent)")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    g.add_argument("--threads", type=int, default=argparse.SUPPRESS)

    grid = _Parser(add_help=False)
    h = grid.add_argument_group("grid and potential")
    h.add_argument("--potential", default=argparse.SUPPRESS, help="potential definition JSON file")
    h.add_argument("--n-radial", type=int, default=argparse.SUPPRESS)
    h.add_argument("--r-max", type=float, default=argparse.SUPPRESS)
    h.add_argument("--sph-order", type=int, default=argparse.SUPPRESS)
    h.add_argument("--tol", dest="svd_tol", type=float, default=argparse.SUPPRESS)

    p = _Parser(prog="biharm4", parents=[common], description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("classify", parents=[common, grid], help="singularity kind of a potential")
    sub.add_parser("resonance", parents=[common, grid], help="resonance functions and far-field data")
    w = sub.add_parser("waveop", parents=[common, grid], help="Born series and stationary wave operator")
    w.add_argument("--cutoff-a", type=float, default=argparse.SUPPRESS)
    w.add_argument("--born-order", type=int, default=argparse.SUPPRESS)
    w.add_argument("--probe-p", type=_probe_list, default=argparse.SUPPRESS)
    b = sub.add_parser("bounds", parents=[common], help="kernel bound certificates")
    b.add_argument("--cutoff-a", type=float, default=argparse.SUPPRESS)
    k = sub.add_parser("kernels", parents=[common], help="kernel utilities")
    ksub = k.add_subparsers(dest="action", required=True, parser_class=_Parser)
    st = ksub.add_parser("selftest", parents=[common], help="run the oracle suites")
    st.add_argument("--quick", action="store_true", help="skip the slow W2 identity suite")
    st.add_argument("--inject-g2-error", type=float, default=0.0, metavar="REL",
                    help="test mode: scale the G2 coefficient by 1 + REL")
    sub.add_parser("report", parents=[common, grid], help="classify + resonances + hypothesis check")
    return p


_FLAG_TO_FIELD = {"out": "out_dir", "potential": "potential"}


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(ns.config) if getattr(ns, "config", None) else RunConfig()
    names = {f.name for f in fields(RunConfig)}
    updates = {}
    for key, val in vars(ns).items():
        key = _FLAG_TO_FIELD.get(key, key)
        if key in names:
            updates[key] = val
    env = os.environ.get("THREADS")
    if env and "threads" not in updates:
        try:
            updates["threads"] = int(env)
        except ValueError as exc:
            raise UsageError(f"THREADS must be an integer, got {env!r}") from exc
    return replace(cfg, **updates)


def _limit_threads(n: int | None):
    if n is None:
        return
    for var in THREAD_VARS:
        os.environ[var] = str(n)
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return
    threadpool_limits(n)


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = config_from_args(ns)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _limit_threads(cfg.threads)
    out = Output(cfg.out_dir)
    try:
        if ns.command == "classify":
            return cmd_classify(cfg, out)
        if ns.command == "resonance":
            return cmd_resonance(cfg, out)
        if ns.command == "waveop":
            return cmd_waveop(cfg, out)
        if ns.command == "bounds":
            return cmd_bounds(cfg, out)
        if ns.command == "kernels":
            return cmd_selftest(cfg, out, ns.quick, ns.inject_g2_error)
        if ns.command == "report":
            return cmd_report(cfg, out)
    except Exception as exc:  # any runtime failure maps to exit 1
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
