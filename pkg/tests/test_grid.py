import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gllab.grid import (GridSpec, ScalarField, VectorField, curl, diff, diff_adjoint, div, grad,
                        integrate, perp_grad, read_field, sample, sample_vector, write_field)

G = GridSpec.square(1.0, 32)
finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_gridspec_guards():
    with pytest.raises(ValueError):
        GridSpec(0, 1, 0, 1, 4, 16)
    with pytest.raises(ValueError):
        GridSpec(1, 0, 0, 1, 16, 16)
    g = GridSpec(0, 2, -1, 1, 16, 8)
    assert g.hx == 0.125 and g.hy == 0.25 and g.shape == (17, 9)


def test_field_rejects_nonfinite():
    bad = np.zeros(G.shape)
    bad[3, 4] = np.nan
    with pytest.raises(ValueError):
        ScalarField(G, bad)


def test_integrate_constant_and_odd():
    assert integrate(sample(G, lambda x, y: 1.0 + 0 * x)) == pytest.approx(4.0, abs=1e-14)
    assert abs(integrate(sample(G, lambda x, y: x))) < 1e-14


def test_integrate_bilinear_exact():
    f = sample(G, lambda x, y: 1 + 2 * x + 3 * y + 4 * x * y)
    assert integrate(f) == pytest.approx(4.0, abs=1e-13)


def test_integrate_exp_abs():
    g = GridSpec.square(1.0, 512)
    val = integrate(sample(g, lambda x, y: np.exp(-2 * np.abs(x)) + 0 * y))
    assert abs(val - 2 * (1 - math.exp(-2))) <= 1e-4


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2 ** 31 - 1))
def test_integrate_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    f, h = rng.normal(size=G.shape), rng.normal(size=G.shape)
    lhs = integrate(ScalarField(G, a * f + b * h))
    rhs = a * integrate(ScalarField(G, f)) + b * integrate(ScalarField(G, h))
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(a) + abs(b)) * 10


def test_grad_polynomial_exact():
    gx = grad(sample(G, lambda x, y: x))
    assert np.all(gx.x == 1.0) or np.max(np.abs(gx.x - 1)) < 1e-13
    assert np.max(np.abs(gx.y)) < 1e-13
    q = grad(sample(G, lambda x, y: x * x + y * y))
    X, Y = G.mesh()
    assert np.max(np.abs(q.x - 2 * X)) < 1e-10
    assert np.max(np.abs(q.y - 2 * Y)) < 1e-10
    i, j = np.argmin(np.abs(G.x - 0.5)), np.argmin(np.abs(G.y - 0.25))
    assert (q.x[i, j], q.y[i, j]) == pytest.approx((1.0, 0.5), abs=1e-10)


def test_grad_second_order():
    errs = []
    for n in (64, 128, 256):
        g = GridSpec.square(1.0, n)
        X, Y = g.mesh()
        v = grad(sample(g, lambda x, y: np.sin(x) * np.cos(y)))
        errs.append(max(np.max(np.abs(v.x - np.cos(X) * np.cos(Y))),
                        np.max(np.abs(v.y + np.sin(X) * np.sin(Y)))))
    assert errs[-1] <= 0.5 * (2 / 256) ** 2
    assert math.log2(errs[0] / errs[1]) > 1.8 and math.log2(errs[1] / errs[2]) > 1.8


def test_curl_div_perp_examples():
    c = curl(sample_vector(G, lambda x, y: (-y / 2, x / 2)))
    assert np.max(np.abs(c.values - 1)) < 1e-13
    d = div(sample_vector(G, lambda x, y: (x, 3 * y)))
    assert np.max(np.abs(d.values - 4)) < 1e-13
    p = perp_grad(sample(G, lambda x, y: x * y))
    X, Y = G.mesh()
    assert np.max(np.abs(p.x + X)) < 1e-13 and np.max(np.abs(p.y - Y)) < 1e-13


def test_curl_of_gradient_vanishes():
    # the x and y difference operators commute, so this is zero up to rounding
    for n in (32, 64, 128):
        g = GridSpec.square(1.0, n)
        c = curl(grad(sample(g, lambda x, y: np.sin(2 * x) * np.exp(y))))
        assert np.max(np.abs(c.values)) < 1e-10


@given(st.integers(0, 2 ** 31 - 1), st.integers(0, 1), st.integers(3, 40))
def test_diff_adjoint_is_transpose(seed, axis, n):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=(n, n + 1))
    g = rng.normal(size=(n, n + 1))
    lhs = np.sum(diff(f, 0.3, axis) * g)
    rhs = np.sum(f * diff_adjoint(g, 0.3, axis))
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))


@given(arrays(np.float64, (9, 9), elements=finite), arrays(np.float64, (9, 9), elements=finite))
def test_field_file_roundtrip(tmp_path_factory, a, b):
    g = GridSpec(-1.0, 3.0, 0.5, 2.5, 8, 8)
    d = tmp_path_factory.mktemp("fields")
    for fld in (ScalarField(g, a), VectorField(g, a, b), ScalarField(g, a + 1j * b)):
        write_field(d / "f.csv", fld)
        back = read_field(d / "f.csv", as_complex=isinstance(fld, ScalarField) and fld.is_complex)
        assert back.grid == g
        if isinstance(fld, VectorField):
            assert np.array_equal(back.x, a) and np.array_equal(back.y, b)
        else:
            assert np.array_equal(back.values, fld.values)


def test_read_field_rejects_wrong_rows(tmp_path):
    g = GridSpec.square(1.0, 8)
    write_field(tmp_path / "f.csv", ScalarField(g, np.zeros(g.shape)))
    lines = (tmp_path / "f.csv").read_text().splitlines()[:-1]
    (tmp_path / "f.csv").write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError):
        read_field(tmp_path / "f.csv")
