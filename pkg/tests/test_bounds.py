import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from biharm4 import bounds as bd
from biharm4 import kernels as kn

PI = np.pi


@pytest.fixture(scope="module")
def certificates():
    return {c.bound_id: c for c in
            [bd.verify_int_L(), bd.verify_lemma91(), bd.verify_2step()]
            + [bd.verify_R_bounds(j) for j in range(4)]}


def test_all_certificates_pass(certificates):
    for cid, cert in certificates.items():
        assert cert.passed, (cid, cert.stability_ratio, cert.notes)
        assert np.isfinite(cert.constant) and cert.constant > 0


def test_certificates_serialize_with_samples(certificates):
    for cert in certificates.values():
        d = json.loads(json.dumps(cert.to_dict()))
        assert d["samples"] and all(len(v) > 0 for v in d["samples"].values())
        assert len(d["backend_constants"]) == 2


def test_L_kernel_backends_agree():
    # frozen from a scipy dblquad oracle on the same double integral
    ga = bd.L_kernel([0.0, 1.0], [0.0, 1.0], backend="gauss")
    cc = bd.L_kernel([0.0, 1.0], [0.0, 1.0], backend="cc")
    assert np.allclose(ga, cc, rtol=1e-10)
    assert ga[0, 0].real == pytest.approx(1466.6734602781, rel=1e-10)
    assert ga[1, 1].real == pytest.approx(180.62338811829, rel=1e-10)


def test_poisson_kernel_constant():
    assert bd.fit_poisson_constant() == pytest.approx(12 * PI**2, rel=1e-8)
    assert bd.fit_c4() == pytest.approx(bd.C4_EXACT, rel=1e-8)


@pytest.mark.parametrize("F", [0.05, 0.2, 0.5])
def test_beta_integral_closed_form(F):
    val, _ = integrate.quad(lambda s: s * s * (s * s + F * F) ** -2.5, 0, np.inf, epsrel=1e-12)
    assert bd.beta_integral(F) == pytest.approx(val, rel=1e-9)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_F_parameter_range(x, y):
    assert 0 < bd.F_param(x, y) <= 0.5 + 1e-15


@pytest.mark.parametrize("x,y", [(0.3, 1.7), (2.0, 2.0), (5.0, 0.4)])
def test_double_transform_routes_agree(x, y):
    a = bd.lemma91_transform(x, y)
    b = bd.lemma91_t_route(x, y)
    assert a == pytest.approx(b, rel=1e-7)


def test_dyadic_stability_detects_power_growth():
    s = np.geomspace(1, 1024, 200)
    assert bd.dyadic_stability(s, np.ones_like(s), 1.0) == 1.0
    assert bd.dyadic_stability(s, 3 + np.sin(s), 1.0) < 2.0
    assert bd.dyadic_stability(s, s**2, 1.0) == pytest.approx(4.0, rel=0.2)
    assert bd.dyadic_stability(s, s ** -2, 1.0) == pytest.approx(4.0, rel=0.2)
    assert bd.dyadic_spread(s, s, 1.0) > 100


def test_overstated_decay_fails_stability():
    # claim |calR(lam, r)| <~ <lam r>^-3 at large lam r, 1.5 powers beyond the truth
    lam = 1.0
    rho = np.geomspace(1.0, 1e3, 61)
    honest = np.abs(kn.calR(lam, rho)) / bd.R_bound_shape(lam, rho, 0)
    claimed = np.abs(kn.calR(lam, rho)) / (bd.R_bound_shape(lam, rho, 0) * bd.bracket(rho) ** -1.5)
    assert bd.dyadic_stability(rho, honest, 1.0) <= bd.STABILITY_MAX
    assert bd.dyadic_stability(rho, claimed, 1.0) > bd.STABILITY_MAX


def test_R_bounds_reject_bad_order():
    with pytest.raises(ValueError):
        bd.verify_R_bounds(4)


def test_two_step_backends_agree():
    for x, y in [(0.0, 0.0), (3.0, 10.0), (40.0, 1.0)]:
        a = bd.two_step_integral(x, y)
        b = bd.two_step_integral(x, y, backend="cc")
        assert a == pytest.approx(b, rel=1e-4)


def test_panel_rule_integrates_polynomials():
    for backend in ("gauss", "cc"):
        x, w = bd.panel_rule(np.array([0.0, 0.5, 2.0]), 8, backend)
        assert np.sum(w * x**5) == pytest.approx(2.0**6 / 6, rel=1e-12)
