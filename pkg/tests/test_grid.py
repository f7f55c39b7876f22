import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from biharm4 import grid as gr

PI = np.pi


@pytest.fixture(scope="module")
def g10():
    return gr.build_grid(32, 10.0, 6)


def test_ball_volume(g10):
    assert g10.weights.sum() == pytest.approx(PI**2 / 2 * 10.0**4, rel=1e-8)


def test_gaussian_integral(g10):
    assert g10.integrate(np.exp(-g10.radii**2)).real == pytest.approx(PI**2, rel=1e-6)


def test_odd_moments_vanish(g10):
    x = g10.points
    scale = g10.integrate(g10.radii**2 * np.exp(-g10.radii**2)).real
    for f in (x[:, 0] * x[:, 1], x[:, 2], x[:, 0] ** 3 * x[:, 3]):
        assert abs(g10.integrate(f * np.exp(-g10.radii**2))) < 1e-12 * scale


def test_second_moment_is_isotropic(g10):
    x = g10.points
    m = [g10.integrate(x[:, j] ** 2 * np.exp(-g10.radii**2)).real for j in range(4)]
    # int x_1^2 e^{-r^2} dx over R^4 = pi^2 / 2
    assert m == pytest.approx([PI**2 / 2] * 4, rel=1e-6)


def test_spherical_order_below_minimum_is_rejected():
    with pytest.raises(ValueError):
        gr.build_grid(8, 4.0, 5)


@pytest.mark.parametrize("order", [6, 7])
def test_shipped_design_strength(order):
    nodes, weights, strength = gr.spherical_design(order)
    assert strength >= order
    assert gr.design_defect(nodes, strength) < 1e-12
    assert weights.sum() == pytest.approx(2 * PI**2)


def test_gaussian_well_l1(g10):
    pot = gr.gaussian_well(g10, 0.05)
    assert pot.l1_norm == pytest.approx(0.05 * PI**2, rel=1e-6)
    assert pot.is_radial


def test_zero_potential(small_grid):
    pot = gr.zero_potential(small_grid)
    assert pot.is_zero
    assert not np.any(pot.U)
    assert all(v == 0 for v in pot.norms().values())


@pytest.mark.parametrize("bad", [np.nan, np.inf, 1j])
def test_potential_rejects_invalid_values(small_grid, bad):
    V = np.ones(small_grid.n_nodes, dtype=complex if isinstance(bad, complex) else float)
    V[3] = bad
    with pytest.raises(ValueError):
        gr.Potential(small_grid, V)


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=16, max_size=16))
def test_factorization_invariants(small_grid, radial):
    V = np.repeat(np.asarray(radial), small_grid.n_sph)
    pot = gr.Potential(small_grid, V)
    assert np.all(pot.v >= 0)
    assert np.allclose(pot.w * pot.v, pot.V, rtol=0, atol=1e-12)
    l1 = small_grid.integrate(pot.v**2).real
    assert l1 == pytest.approx(pot.l1_norm, rel=1e-12, abs=1e-300)


def test_s_fixture_potential_at_origin(small_grid):
    fx = gr.engineered_resonance_fixture(small_grid, "s_wave")
    # Delta^2 (1 + e^{-r^2}) = 96 at r = 0 and phi(0) = 2
    assert fx.potential.evaluate(0.0) == pytest.approx(-48.0, rel=1e-10)


@pytest.mark.parametrize("kind", sorted(gr.FIXTURE_KINDS))
def test_fixture_solves_the_equation(small_grid, kind):
    fx = gr.engineered_resonance_fixture(small_grid, kind)
    res = np.abs(fx.bilaplacian_phi + fx.potential.V * fx.phi) / (1 + np.abs(fx.bilaplacian_phi))
    assert res.max() <= 1e-8


def test_fixture_rejects_unknown_kind(small_grid):
    with pytest.raises(ValueError):
        gr.engineered_resonance_fixture(small_grid, "f_wave")


def test_theorem_case_weights():
    assert gr.THEOREM_CASES == {1: 8, 2: 12, 3: 16, 4: 16}


def test_hypothesis_check_gaussian_and_slow_tail(small_grid):
    wide = gr.gaussian_well(gr.build_grid(16, 16.0), 0.05)
    for case in (1, 2, 3, 4):
        assert gr.hypothesis_check(wide, case)["all_finite"]
    # on R = 8 the <x>^16 weighted Gaussian still has mass beyond R/2
    well = gr.gaussian_well(small_grid, 0.05)
    assert not gr.hypothesis_check(well, 3)["weighted_L1_finite"]
    slow = gr.power_potential(small_grid, power=5.0)
    chk = gr.hypothesis_check(slow, 3)
    assert chk["weight_exponent"] == 16
    assert not chk["weighted_L1_finite"]
    assert gr.hypothesis_check(gr.zero_potential(small_grid), 1)["all_finite"]
    with pytest.raises(ValueError):
        gr.hypothesis_check(well, 5)


def test_lq_loc_uniform_dominated_by_global_norm(small_grid):
    pot = gr.gaussian_well(small_grid, 0.05)
    assert 0 < pot.lq_loc_uniform() <= pot.lq_norm() * (1 + 1e-12)


def test_sample_potential_definitions(small_grid, tmp_path):
    g = gr.sample_potential({"type": "gaussian", "depth": 0.02}, small_grid)
    assert g.V.min() == pytest.approx(-0.02 * np.exp(-small_grid.r[0] ** 2))
    path = tmp_path / "pot.json"
    path.write_text(json.dumps({"type": "table", "indices": [0, 5], "values": [1.0, -2.0]}))
    t = gr.sample_potential(path, small_grid)
    assert t.V[5] == -2.0 and np.count_nonzero(t.V) == 2
    with pytest.raises(ValueError):
        gr.sample_potential({"type": "table", "indices": [10**9], "values": [1.0]}, small_grid)
    with pytest.raises(ValueError):
        gr.sample_potential({"type": "bogus"}, small_grid)
