import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gllab.caselab import inner_variation_1d_check
from gllab.glcore import GLParams, GLState, apply_gauge, gl_energy
from gllab.grid import GridSpec, ScalarField, VectorField, integrate
from gllab.innervar import (TestVectorField, affine_eta, bump_eta, closed_inner, closed_inner_E,
                            combine_eta, flow, identity_checks, inner_outer_link_check,
                            numeric_inner_variations, outer_variations, pullback_state,
                            random_bump_eta, tangent_sine_eta, zero_eta)
from gllab.suites import analytic_state, gauge_function

P = GLParams(0.5, 0.3)
G64 = GridSpec.square(1.0, 64)


def test_support_kind_validation():
    g = GridSpec.square(1.0, 16)
    with pytest.raises(ValueError):
        TestVectorField(g, lambda x, y: (x, y), lambda x, y: ((1, 0), (0, 1)), "compact_interior")
    with pytest.raises(ValueError):
        TestVectorField(g, lambda x, y: (x, y), lambda x, y: ((1, 0), (0, 1)), "boundary_tangent")
    with pytest.raises(ValueError):
        TestVectorField(g, lambda x, y: (x, y), lambda x, y: ((1, 0), (0, 1)), "sideways")
    eta = tangent_sine_eta(g)
    e1, e2 = eta.node_values()
    assert np.max(np.abs(e1[[0, -1], :])) <= 1e-12 and np.max(np.abs(e2[:, [0, -1]])) <= 1e-12


def test_zeta_is_jacobian_times_eta():
    eta = tangent_sine_eta(G64)
    z = eta.zeta
    e1, e2 = eta.node_values()
    j11, j12, j21, j22 = eta.node_jacobian()
    assert np.allclose(z.x, j11 * e1 + j12 * e2) and np.allclose(z.y, j21 * e1 + j22 * e2)


def test_flow_zero_and_translation():
    fm = flow(zero_eta(G64), 0.1)
    X, Y = G64.mesh()
    assert np.array_equal(fm.forward[0], X) and np.array_equal(fm.forward[1], Y)
    assert all(np.all(np.asarray(j) == e) for j, e in zip(fm.jac_forward, (1, 0, 0, 1)))
    c = affine_eta(G64, np.zeros((2, 2)), (0.3, -0.2))
    fm = flow(c, 0.5)
    assert np.max(np.abs(fm.forward[0] - (X + 0.15))) < 1e-14
    assert np.max(np.abs(fm.inverse[1] - (Y + 0.1))) < 1e-14


def test_flow_exponential_oracle():
    eta = affine_eta(G64, np.eye(2))
    fm = flow(eta, 0.15)
    X, Y = G64.mesh()
    assert np.max(np.abs(fm.forward[0] - math.exp(0.15) * X)) < 1e-10
    assert np.max(np.abs(fm.jac_inverse[0] - math.exp(-0.15))) < 1e-10


def test_flow_guard_and_group_property():
    eta = tangent_sine_eta(G64)
    with pytest.raises(ValueError):
        flow(eta, 10.0)
    s, t = 0.05, 0.08
    a = flow(eta, s)
    from gllab.innervar import _integrate
    X2, Y2, _ = _integrate(eta, t, *a.forward, 16)
    b = flow(eta, s + t)
    assert max(np.max(np.abs(X2 - b.forward[0])), np.max(np.abs(Y2 - b.forward[1]))) < 1e-7
    assert a.composition_error() < 1e-8


def test_pullback_trivial():
    s = analytic_state(G64)
    same = pullback_state(s, flow(tangent_sine_eta(G64), 0.0))
    assert same is s or np.array_equal(same.u.values, s.u.values)
    moved = pullback_state(s, flow(zero_eta(G64), 0.2))
    assert np.allclose(moved.u.values, s.u.values, atol=1e-12)
    assert np.allclose(moved.A.x, s.A.x, atol=1e-12)


def test_zero_field_variations_vanish():
    s = analytic_state(G64)
    r = numeric_inner_variations(s, P, zero_eta(G64), 2e-2)
    assert abs(r.d1) <= 1e-9 and abs(r.d2) <= 1e-9
    assert closed_inner(s, P, zero_eta(G64)) == (0.0, 0.0)
    assert inner_outer_link_check(s, P, zero_eta(G64))["defect"] == 0.0
    zero_v = np.zeros(G64.shape, complex)
    assert outer_variations(s, P, zero_v, VectorField(G64, zero_v.real, zero_v.real)) == (0.0, 0.0)


def test_closed_matches_numeric_on_smooth_state():
    g = GridSpec.square(1.0, 128)
    s = analytic_state(g)
    eta = tangent_sine_eta(g)
    c1, c2 = closed_inner(s, P, eta)
    r = numeric_inner_variations(s, P, eta, 2e-2)
    assert abs(c1 - r.d1) <= 5e-4 * abs(r.d1)
    assert abs(c2 - r.d2) <= 5e-4 * abs(r.d2)
    # central differences are second order in dt
    assert all(1.8 < o < 2.2 for o in r.richardson_order)


def test_closed_forms_gauge_invariant():
    s = analytic_state(G64)
    eta = tangent_sine_eta(G64)
    c = closed_inner(s, P, eta)
    cg = closed_inner(apply_gauge(s, gauge_function(G64)), P, eta)
    assert all(abs(a - b) <= 1e-9 * (1 + abs(a)) for a, b in zip(c, cg))


def test_closed_inner_E_matches_numeric():
    g = GridSpec.square(1.0, 128)
    X, Y = g.mesh()
    u = ScalarField(g, (0.9 + 0.05 * np.sin(X) * np.cos(Y)) * np.exp(0.5j * (X - Y)))
    eta = tangent_sine_eta(g)
    c1, c2 = closed_inner_E(u, 0.5, eta)
    r = numeric_inner_variations(u, GLParams(0.5), eta, 2e-2, functional="e")
    assert abs(c1 - r.d1) <= 1e-3 * abs(r.d1)
    assert abs(c2 - r.d2) <= 1e-3 * abs(r.d2)


def test_outer_variations_match_finite_differences():
    s = analytic_state(G64)
    rng = np.random.default_rng(5)
    X, Y = G64.mesh()
    v = (np.sin(X) + 1j * np.cos(Y)) * 0.3
    B = VectorField(G64, 0.2 * np.sin(X * Y), 0.1 * np.cos(2 * X))
    d1, d2 = outer_variations(s, P, v, B)
    t = 1e-3

    def E(c):
        return gl_energy(GLState.from_arrays(G64, s.u.values + c * v, s.A.x + c * B.x,
                                             s.A.y + c * B.y), P)

    e0, ep, em = E(0), E(t), E(-t)
    assert abs((ep - em) / (2 * t) - d1) <= 1e-6 * (1 + abs(d1))
    assert abs((ep - 2 * e0 + em) / t ** 2 - d2) <= 1e-6 * (1 + abs(d2))
    assert rng is not None


def test_link_defect_decays():
    d = [inner_outer_link_check(analytic_state(g), P, tangent_sine_eta(g))["defect"]
         for g in (G64, GridSpec.square(1.0, 128))]
    assert d[0] / d[1] > 3.0


@given(st.lists(st.floats(-3, 3), min_size=8, max_size=8), st.integers(0, 2 ** 31 - 1))
def test_trace_identity_polynomial_fields(c, seed):
    def func(x, y):
        return (c[0] * x * x + c[1] * x * y + c[2] * y ** 3 + c[3] * x,
                c[4] * y * y + c[5] * x ** 3 + c[6] * x * y + c[7])

    def jac(x, y):
        return ((2 * c[0] * x + c[1] * y + c[3], c[1] * x + 3 * c[2] * y * y),
                (3 * c[5] * x * x + c[6] * y, 2 * c[4] * y + c[6] * x))

    eta = TestVectorField(G64, func, jac, None)
    pts = np.random.default_rng(seed).uniform(-1, 1, size=(50, 2))
    out = identity_checks(eta, pts)
    assert np.max(out["trace_identity"]["defect"]) <= 1e-12 * (1 + max(map(abs, c))) ** 2


def test_trace_identity_hyperbolic_field():
    eta = affine_eta(G64, [[1, 0], [0, -1]])
    out = identity_checks(eta, np.array([[0.3, 0.2], [-0.5, 0.9]]))
    assert np.all(out["trace_identity"]["lhs"] == -2.0) and np.all(out["trace_identity"]["rhs"] == -2.0)
    assert np.all(out["trace_identity"]["defect"] == 0.0)


def test_determinant_expansion_is_cubic():
    rng = np.random.default_rng(42)
    out = identity_checks(zero_eta(G64), np.zeros((1, 2)), rng.normal(size=(2, 2)), rng.normal(size=(2, 2)))
    assert 2.9 <= out["det_expansion"]["loglog_slope"] <= 3.1


def test_compact_integrals_vanish():
    g = GridSpec.square(1.0, 512)
    eta = random_bump_eta(g, np.random.default_rng(3))
    j11, j12, j21, j22 = eta.node_jacobian()
    assert abs(integrate(j11 + j22, g)) <= 1e-10
    assert abs(integrate(j11 * j22 - j12 * j21, g)) <= 1e-10


def test_combine_eta_is_linear():
    rng = np.random.default_rng(0)
    a = random_bump_eta(G64, rng)
    b = random_bump_eta(G64, rng)
    c = combine_eta([a, b], [2.0, -0.5])
    for x, y, z in zip(c.node_jacobian(), a.node_jacobian(), b.node_jacobian()):
        assert np.allclose(x, 2 * y - 0.5 * z, atol=1e-14)
    with pytest.raises(ValueError):
        combine_eta([a, tangent_sine_eta(G64)], [1, 1])


def test_bump_eta_support():
    eta = bump_eta(G64, (0.0, 0.0), (0.5, 0.5), np.ones((2, 1, 3)))
    X, Y = G64.mesh()
    e1, e2 = eta.node_values()
    outside = (np.abs(X) >= 0.5) | (np.abs(Y) >= 0.5)
    assert np.all(e1[outside] == 0) and np.all(e2[outside] == 0)


def test_second_inner_variation_1d():
    r = inner_variation_1d_check()
    assert r.defect <= 1e-5


@pytest.mark.xfail(strict=True, reason="the one-half coefficient is off by a factor of two; "
                                       "differences give int |eta'|^2 |V'|^2")
def test_second_inner_variation_1d_half_coefficient():
    r = inner_variation_1d_check()
    assert r.half_defect <= 1e-5
