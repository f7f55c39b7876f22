import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from biharm4 import resonance as rs

TYPE_OF = {"s_wave": "s", "p_wave": "p", "d_wave": "d", "eigen": "eigenfunction"}


@pytest.mark.parametrize("kind", sorted(TYPE_OF))
def test_fixture_recovery(fixture_cascade, kind):
    fx, _ = fixture_cascade(kind)
    pot = fx.potential
    res = rs.phi_from_zeta(fx.zeta, pot)
    inner = pot.grid.radii < 4
    err = np.max(np.abs(res.phi - fx.phi)[inner]) / np.max(np.abs(fx.phi)[inner])
    assert err <= 0.02
    assert res.type == TYPE_OF[kind]
    assert res.fit_ok
    assert rs.inverse_check(res, pot, fx.zeta) >= 0.99
    assert rs.pde_residual(res, pot) <= 1e-6 * np.linalg.norm(np.sqrt(pot.grid.weights) * pot.v * fx.zeta)


def test_s_fixture_coefficients(fixture_cascade):
    fx, _ = fixture_cascade("s_wave")
    c0, a, b, A = rs.asymptotic_coeffs(fx.zeta, fx.potential)
    # phi = 1 + exp(-r^2) tends to 1, so c0 = -1 and nothing decays like |x|^-1 or |x|^-2
    assert c0 == pytest.approx(-1.0, rel=1e-8)
    assert np.linalg.norm(a) < 1e-10 and np.linalg.norm(A) < 1e-10


def test_p_and_d_fixture_coefficients(fixture_cascade):
    fx, _ = fixture_cascade("p_wave")
    _, a, _, A = rs.asymptotic_coeffs(fx.zeta, fx.potential)
    assert np.allclose(a, [1, 0, 0, 0], atol=1e-8)
    fx, _ = fixture_cascade("d_wave")
    _, a, _, A = rs.asymptotic_coeffs(fx.zeta, fx.potential)
    # x1 x2 / |x|^4 corresponds to A_12 = A_21 = 1/2
    expected = np.zeros((4, 4))
    expected[0, 1] = expected[1, 0] = 0.5
    assert np.allclose(A, expected, atol=1e-8)


def _radial_member(pot):
    # (1 - c r^2) e^{-r^2} with c chosen so that <v, zeta> = 0
    g = pot.grid
    r2 = g.radii**2
    e = np.exp(-r2)
    c = np.sum(g.weights * pot.v * e) / np.sum(g.weights * pot.v * r2 * e)
    return (1 - c * r2) * e


def test_trace_part_of_far_field(fixture_grid):
    from biharm4 import grid as gr

    pot = gr.gaussian_well(fixture_grid, 0.05)
    zeta = _radial_member(pot)
    c0, a, b, A = rs.asymptotic_coeffs(zeta, pot)
    assert abs(b) > 1e-3
    assert np.allclose(A, -b / 4 * np.eye(4), atol=1e-12 * abs(b))
    res = rs.phi_from_zeta(zeta, pot)
    assert res.fit_exponent <= -2.5


def test_fit_farfield_detects_wrong_constant():
    r = rs.RAY_RADII
    model = -1.0 + 0.3 / r**2
    exact = model + 0.01 / r**4
    slope, ok = rs.fit_farfield(r, exact, model)
    assert slope == pytest.approx(-4.0, abs=1e-6) and ok
    slope, ok = rs.fit_farfield(r, exact, model + 0.1)
    assert abs(slope) < 0.1 and not ok
    assert rs.fit_farfield(r, model, model) == (float("-inf"), True)


def test_classify_type_thresholds():
    z = np.zeros(4)
    Z = np.zeros((4, 4))
    assert rs.classify_type(1.0, z, Z) == "s"
    assert rs.classify_type(0.0, np.array([0, 1.0, 0, 0]), Z) == "p"
    assert rs.classify_type(0.0, z, np.eye(4)) == "d"
    assert rs.classify_type(0.0, z, Z) == "eigenfunction"


def test_non_member_rejected(well):
    with pytest.raises(ValueError):
        rs.phi_from_zeta(well.v, well)
    with pytest.raises(ValueError):
        rs.phi_from_zeta(np.zeros(well.grid.n_nodes), well)
    with pytest.raises(ValueError):
        rs.pde_residual(np.ones(well.grid.n_nodes), well)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_phi_is_linear(fixture_cascade, alpha, beta):
    assume(abs(alpha) + abs(beta) > 1e-3)
    fx_s, _ = fixture_cascade("s_wave")
    pot = fx_s.potential
    z1 = fx_s.zeta
    # an odd function is automatically orthogonal to the radial v
    z2 = pot.grid.points[:, 0] * np.exp(-pot.grid.radii**2)
    p1, p2 = rs.phi_from_zeta(z1, pot).phi, rs.phi_from_zeta(z2, pot).phi
    p = rs.phi_from_zeta(alpha * z1 + beta * z2, pot).phi
    scale = abs(alpha) * np.abs(p1).max() + abs(beta) * np.abs(p2).max() + 1e-300
    assert np.abs(p - (alpha * p1 + beta * p2)).max() <= 1e-10 * scale


def test_type_is_sign_invariant(fixture_cascade):
    fx, _ = fixture_cascade("p_wave")
    a = rs.phi_from_zeta(fx.zeta, fx.potential)
    b = rs.phi_from_zeta(-fx.zeta, fx.potential)
    assert a.type == b.type == "p"
    assert np.allclose(a.a, -b.a)


def test_ray_table_shape(fixture_cascade):
    fx, _ = fixture_cascade("s_wave")
    res = rs.phi_from_zeta(fx.zeta, fx.potential)
    tab = res.ray_table()
    assert tab.shape == (len(rs.RAY_RADII), 3)
    assert set(res.to_dict()) >= {"type", "c0", "a", "b", "A", "fit_exponent"}
