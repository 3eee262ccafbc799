import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gllab.caselab import (allen_cahn_1d, certificate_check, critical_L, monotone_1d_check,
                           poincare_check, prop41_fields, q_closed, q_quadrature_vs_closed,
                           random_eta_sweep, sine_samples, threshold_function, weak_form_residual)
from gllab.innervar import zero_eta
from gllab.qforms import q_h

# frozen oracle values
Q1 = 0.5176664955531215
Q2 = -0.3429002880557108
L_STAR = 1.3999107451745658


def test_closed_form_frozen_values():
    assert q_closed(1.0) == pytest.approx(Q1, abs=1e-14)
    assert q_closed(2.0) == pytest.approx(Q2, abs=1e-14)
    assert critical_L() == pytest.approx(L_STAR, abs=1e-10)
    with pytest.raises(ValueError):
        q_closed(0.0)
    with pytest.raises(ValueError):
        critical_L(bracket=(2.0, 3.0))


def test_threshold_signs_around_critical_length():
    assert threshold_function(L_STAR - 1e-8) > 0 > threshold_function(L_STAR + 1e-8)


@given(st.floats(0.05, 5.0))
def test_closed_form_sign_matches_threshold(L):
    assert q_closed(L) * threshold_function(L) >= 0


def test_quadrature_matches_closed_form():
    row = q_quadrature_vs_closed(1.0, 256)
    assert row.defect <= row.tolerance
    # D eta is a rotation on x = 0, so the line term vanishes
    assert abs(row.measure_term) <= 1e-10


def test_field_values_and_tangency():
    h, mu, eta = prop41_fields(1.0, 64)
    X, _ = h.grid.mesh()
    assert np.allclose(h.values.values, np.exp(-np.abs(X)))
    e1, e2 = eta.node_values()
    bm = h.grid.boundary_mask
    g = h.grid
    on_x = np.isclose(np.abs(X), 1.0)
    assert np.max(np.abs(e1[on_x])) <= 1e-12
    assert np.max(np.abs(e2[~on_x & bm])) <= 1e-12
    assert mu.line_part.segments[0].density == 2.0 and g.nx == 64


def test_weak_form_residual():
    rng = np.random.default_rng(0)
    phis = []
    for _ in range(20):
        a, b, c = rng.normal(size=3)

        def phi(x, y, a=a, b=b, c=c):
            return (1 + a * x + b * y) * np.cos(c * y) * (1 - x * x) * (1 - y * y)

        def px(x, y, a=a, b=b, c=c):
            return np.cos(c * y) * (1 - y * y) * (a * (1 - x * x) - 2 * x * (1 + a * x + b * y))

        def py(x, y, a=a, b=b, c=c):
            base = (1 + a * x + b * y) * (1 - y * y)
            dbase = b * (1 - y * y) - 2 * y * (1 + a * x + b * y)
            return (1 - x * x) * (dbase * np.cos(c * y) - c * base * np.sin(c * y))

        phis.append((phi, px, py))
    assert max(weak_form_residual(1.0, 256, phis)) <= 1e-3


def test_certificate_frozen_margins_and_guards():
    cert = certificate_check(0.05, 4.0, 0.75)
    assert cert.margins == pytest.approx((0.16666666666666674, 1.0, 0.16586326553948189), abs=1e-15)
    assert cert.ok
    assert not certificate_check(1.0, 4.0, 0.75).ok
    with pytest.raises(ValueError):
        certificate_check(0.05, 3.0, 0.5)
    with pytest.raises(ValueError):
        certificate_check(0.05, 0.0, 0.6)


def test_poincare_samples():
    rng = np.random.default_rng(42)
    assert poincare_check(0.05, sine_samples(0.05, rng, 10), n=64) <= 1.0
    zero = (lambda x, y: 0 * x, lambda x, y: 0 * x)
    assert poincare_check(0.05, [zero], n=16) == 0.0
    with pytest.raises(ValueError):
        poincare_check(0.05, [(lambda x, y: 1 + 0 * x, lambda x, y: 0 * x)], n=16)


def test_random_sweep_edge_cases():
    assert random_eta_sweep(0.5, 0) == math.inf
    assert random_eta_sweep(2.0, 0, n=128, include_special=True) < 0
    assert random_eta_sweep(0.05, 5, n=64) > 0


def test_zero_eta_on_prop41_fields():
    h, mu, _ = prop41_fields(2.0, 32)
    assert q_h(h, mu, zero_eta(h.grid)) == 0.0


def test_monotone_linear_profile_eigenvalue():
    # f' = 0 along V = x, so the operator is -d^2 with eigenvalue (pi / 16)^2 on (-8, 8)
    r = monotone_1d_check(lambda v: 0 * v, lambda v: 0 * v, lambda x: x, -8.0, 8.0, n=4000)
    assert r.min_eigenvalue == pytest.approx((math.pi / 16) ** 2, rel=1e-5)
    assert r.dense_check == pytest.approx(r.min_eigenvalue, rel=1e-8)


def test_allen_cahn_profile_is_stable():
    V, _, _, fp, fpp = allen_cahn_1d()
    r = monotone_1d_check(fp, fpp, V, -8.0, 8.0)
    assert r.min_eigenvalue >= -1e-6
    assert r.el_residual <= 1e-6


def test_monotone_guards():
    with pytest.raises(ValueError):
        monotone_1d_check(lambda v: 0 * v, lambda v: 0 * v, lambda x: x * x, -1.0, 1.0, n=100)
    with pytest.raises(ValueError):
        monotone_1d_check(lambda v: v, lambda v: 1 + 0 * v, lambda x: x, -1.0, 1.0, n=100)


def test_h_boundary_values():
    h, _, _ = prop41_fields(1.5, 32)
    X, _ = h.grid.mesh()
    v = h.values.values
    assert np.all(v[X == 0.0] == 1.0)
    assert np.allclose(v[np.isclose(np.abs(X), 1.5)], math.exp(-1.5), rtol=1e-15)
