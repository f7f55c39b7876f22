import json
import warnings

import numpy as np
import pytest

from biharm4 import classify as cl
from biharm4 import grid as gr

EXPECTED = {
    "s_wave": ("First", (1, 0, 0, 0), {"s": 1}),
    "p_wave": ("Second", (4, 4, 0, 0), {"p": 4}),
    "d_wave": ("Third", (9, 9, 9, 0), {"d": 9}),
    "eigen": ("Fourth", (16, 16, 16, 16), {"eigenfunction": 16}),
}


def test_small_well_is_regular(well):
    rep = cl.cascade(well)
    assert rep.kind == "Regular"
    assert rep.ranks == (0, 0, 0, 0)
    assert rep.interval == "(1,inf)"
    assert rep.smallest_singular_values["QT0Q"] > 1e3 * rep.tol
    assert rep.gap_ok and rep.resonances == []


@pytest.mark.parametrize("kind", sorted(EXPECTED))
def test_fixture_cascade(fixture_cascade, kind):
    _, rep = fixture_cascade(kind)
    exp_kind, exp_ranks, exp_counts = EXPECTED[kind]
    assert rep.kind == exp_kind
    assert rep.ranks == exp_ranks
    assert rep.gap_ok
    assert {k: v for k, v in rep.resonance_counts.items() if v} == exp_counts
    assert len(rep.resonances) == exp_ranks[0]


def test_fourth_kind_interval(fixture_cascade):
    _, rep = fixture_cascade("eigen")
    assert rep.t3_zero is True
    assert rep.interval == "(1,4)"
    assert cl.theorem_case(rep.kind, rep.t3_zero) == 4


@pytest.mark.parametrize("kind", ["p_wave", "d_wave"])
def test_cascade_subspaces_are_nested(fixture_cascade, kind):
    _, rep = fixture_cascade(kind)
    names = [f"S{k}" for k in range(1, 5) if f"S{k}" in rep.projections]
    for outer, inner in zip(names, names[1:]):
        A, B = rep.projections[outer].basis, rep.projections[inner].basis
        # range(B) lies inside range(A)
        assert np.linalg.norm(B - A @ (A.conj().T @ B)) < 1e-8


@pytest.mark.parametrize("kind", ["s_wave", "p_wave", "d_wave"])
def test_refinement_keeps_ranks(kind):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        coarse = cl.cascade(gr.engineered_resonance_fixture(gr.build_grid(24, 8.0), kind).potential)
    assert coarse.ranks == EXPECTED[kind][1]


def test_moment_checks_reject_a_non_member(well):
    # v itself has a nonzero mean against v
    checks = cl.moment_check(well.v, well, 1)
    assert checks["1"] > 1e-3
    with pytest.raises(ValueError):
        cl.moment_check(well.v, well, 3)


def test_report_invariants():
    base = dict(smallest_singular_values={}, resonance_counts={}, interval="(1,inf)",
                t3_zero=None, tol=1e-7)
    with pytest.raises(ValueError):
        cl.SingularityReport(kind="First", ranks=(1, 2, 0, 0), **base)
    with pytest.raises(ValueError):
        cl.SingularityReport(kind="Regular", ranks=(1, 0, 0, 0), **base)


def test_report_serializes(fixture_cascade):
    _, rep = fixture_cascade("s_wave")
    d = json.loads(json.dumps(rep.to_dict()))
    assert d["ranks"] == {"S1": 1, "S2": 0, "S3": 0, "S4": 0}
    assert d["candidate_kinds"] == ["First"]


@pytest.mark.parametrize("kind,t3,interval,case", [
    ("Regular", None, "(1,inf)", 1),
    ("First", None, "(1,inf)", 1),
    ("Second", None, "(1,4)", 2),
    ("Third", None, "(1,2]", 3),
    ("Fourth", True, "(1,4)", 4),
    ("Fourth", False, "(1,2]", 3),
])
def test_interval_and_case_tables(kind, t3, interval, case):
    assert cl.predicted_interval(kind, t3) == interval
    assert cl.theorem_case(kind, t3) == case


def test_zero_potential_rejected(small_grid):
    with pytest.raises(ValueError):
        cl.cascade(gr.zero_potential(small_grid))
    with pytest.raises(ValueError):
        cl.cascade(gr.gaussian_well(small_grid), tol=0.0)


def test_regular_expansion_rejects_singular(fixture_cascade):
    fx, _ = fixture_cascade("s_wave")
    with pytest.raises(ValueError):
        cl.regular_expansion_check(fx.potential)


def test_graded_basis_splits_levels():
    e = np.eye(4)
    blocks = cl.graded_basis([e[:, :3], e[:, :1]])
    assert [b.shape[1] for b in blocks] == [2, 1]
    assert np.linalg.norm(blocks[0].conj().T @ e[:, :1]) < 1e-14
