"""Line-vorticity example on a square, its stability certificate, and 1D checks.

On ``(-L, L)^2`` the field ``h = exp(-|x|)`` solves ``-h'' + h = 2 delta_0(x)``,
so its vorticity is a line measure of density +2 on ``{x = 0}``.  The special
boundary-tangent field

    eta = (cos(pi x / 2L) sin(pi y / 2L), -sin(pi x / 2L) cos(pi y / 2L))

is divergence free and gives the closed form implemented in :func:`q_closed`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from .grid import GridSpec
from .innervar import (TestVectorField, inner_second_1d_closed, numeric_inner_1d,
                       random_bump_eta)
from .parallel import ordered_map
from .qforms import LimitingField, LineMeasurePart, Segment, VorticityMeasure, line_integral, q_h

LINE_DENSITY = 2.0
BRACKET = (0.5, 3.0)


def threshold_function(L: float) -> float:
    """Bracket whose sign is the sign of the closed form."""
    return -4 * L * L + math.pi ** 2 - math.exp(-2 * L) * (12 * L * L + math.pi ** 2)


def q_closed(L: float) -> float:
    if not L > 0:
        raise ValueError("L must be positive")
    pi2 = math.pi ** 2
    return pi2 / (4 * L * (4 * L * L + pi2)) * threshold_function(L)


def critical_L(tol: float = 1e-10, bracket=BRACKET) -> float:
    a, b = bracket
    fa, fb = threshold_function(a), threshold_function(b)
    if not fa * fb < 0:
        raise ValueError(f"no sign change on [{a}, {b}]: f(a)={fa:.3e}, f(b)={fb:.3e}")
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = threshold_function(m)
        if fm == 0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def special_eta(grid: GridSpec, L: float) -> TestVectorField:
    k = math.pi / (2 * L)

    def func(x, y):
        return np.cos(k * x) * np.sin(k * y), -np.sin(k * x) * np.cos(k * y)

    def jac(x, y):
        cx, sx, cy, sy = np.cos(k * x), np.sin(k * x), np.cos(k * y), np.sin(k * y)
        return ((-k * sx * sy, k * cx * cy), (-k * cx * cy, k * sx * sy))

    return TestVectorField(grid, func, jac, "boundary_tangent", "prop41-special")


def _h(x, y):
    return np.exp(-np.abs(x)) + 0.0 * y


def _h_grad(x, y):
    # one-sided value at x = 0; only |h'|^2 enters the forms
    s = np.where(x >= 0, -1.0, 1.0)
    return s * np.exp(-np.abs(x)), 0.0 * y


def prop41_fields(L: float, n: int = 256, lam: float = 1.0):
    """``(h, mu, eta)`` on ``(-L, L)^2`` with ``n`` cells per side."""
    if not L > 0:
        raise ValueError("L must be positive")
    g = GridSpec.square(L, n)
    h = LimitingField.from_function(g, _h, "magnetic_h", lam, _h_grad)
    mu = VorticityMeasure(None, LineMeasurePart((Segment((0.0, -L), (0.0, L), LINE_DENSITY),)))
    return h, mu, special_eta(g, L)


def weak_form_residual(L: float, n: int, phis) -> list[float]:
    """``|int grad h . grad phi + h phi - int phi dmu| / ||phi||_{H1}`` per test function.

    ``phis`` holds ``(phi, phi_x, phi_y)`` callables.
    """
    h, mu, _ = prop41_fields(L, n)
    g = h.grid
    X, Y = g.mesh()
    hv = h.values.values
    # h' enters linearly here, so the kink node takes the mean of both one-sided limits
    hx = -np.sign(X) * hv
    hy = np.zeros_like(hv)
    out = []
    for phi, px, py in phis:
        f, fx, fy = phi(X, Y), px(X, Y), py(X, Y)
        lhs = np.sum(g.weights * (hx * fx + hy * fy + hv * f))
        rhs = line_integral(phi, mu.line_part, g.hy, signed=True)
        norm = math.sqrt(np.sum(g.weights * (f * f + fx * fx + fy * fy)))
        out.append(float(abs(lhs - rhs) / norm))
    return out


@dataclass(frozen=True)
class Prop41Row:
    L: float
    n: int
    q_closed: float
    q_quadrature: float
    measure_term: float

    @property
    def defect(self) -> float:
        return abs(self.q_quadrature - self.q_closed)

    @property
    def tolerance(self) -> float:
        return 1e-3 * (1 + abs(self.q_closed))


def q_quadrature_vs_closed(L: float, n: int = 512) -> Prop41Row:
    h, mu, eta = prop41_fields(L, n)
    q = q_h(h, mu, eta)
    mterm = q - q_h(h, None, eta)
    return Prop41Row(L, n, q_closed(L), q, mterm)


@dataclass(frozen=True)
class Certificate:
    L: float
    alpha2: float
    beta2: float
    margins: tuple

    @property
    def ok(self) -> bool:
        return all(m > 0 for m in self.margins)


def certificate_check(L: float, alpha2: float, beta2: float) -> Certificate:
    if not 0.5 < beta2 < 1:
        raise ValueError("beta^2 must lie in (1/2, 1)")
    if not alpha2 > 0 or not L > 0:
        raise ValueError("alpha^2 and L must be positive")
    m1 = 2 - 2 / alpha2 - 1 / beta2
    m3 = 1 - beta2 - 4 * alpha2 * L * math.expm1(2 * L)
    return Certificate(L, alpha2, beta2, (m1, 1.0, m3))


def poincare_constant(L: float) -> float:
    return 2 * L * math.expm1(2 * L)


def poincare_check(L: float, samples, n: int = 256) -> float:
    """Worst ratio ``int e^{-2|x|} f^2 / (C int e^{-2|x|} f_x^2)`` over ``(f, f_x)`` samples."""
    g = GridSpec.square(L, n)
    X, Y = g.mesh()
    wt = g.weights * np.exp(-2 * np.abs(X))
    c = poincare_constant(L)
    worst = 0.0
    for f, fx in samples:
        fv, fxv = f(X, Y), fx(X, Y)
        lhs = float(np.sum(wt * fv * fv))
        rhs = float(np.sum(wt * fxv * fxv))
        if rhs == 0:
            if lhs > 0:
                raise ValueError("sample with zero x-derivative but nonzero values")
            continue
        worst = max(worst, lhs / (c * rhs))
    return worst


def sine_samples(L: float, rng: np.random.Generator, count: int, modes: int = 4):
    """Random ``sum_k a_k sin(k pi (x+L)/2L) g(y)`` with smooth ``g``."""
    out = []
    for _ in range(count):
        a = rng.normal(size=modes)
        b = rng.normal(size=2)
        ks = np.arange(1, modes + 1) * math.pi / (2 * L)

        def f(x, y, a=a, b=b, ks=ks):
            s = sum(ak * np.sin(k * (x + L)) for ak, k in zip(a, ks))
            return s * (b[0] + b[1] * np.cos(y))

        def fx(x, y, a=a, b=b, ks=ks):
            s = sum(ak * k * np.cos(k * (x + L)) for ak, k in zip(a, ks))
            return s * (b[0] + b[1] * np.cos(y))

        out.append((f, fx))
    return out


def random_eta_sweep(L: float, n_eta: int, seed: int = 42, n: int = 128,
                     include_special: bool = False, lam: float = 1.0) -> float:
    """Minimum of the magnetic form over seeded random compactly supported fields."""
    if n_eta == 0 and not include_special:
        return math.inf
    h, mu, special = prop41_fields(L, n, lam)
    rng = np.random.default_rng(seed)
    etas = [random_bump_eta(h.grid, rng) for _ in range(n_eta)]
    if include_special:
        etas.append(special)
    # fields are drawn sequentially so the sample set does not depend on the thread count
    return min(ordered_map(lambda e: q_h(h, mu, e), etas))


# -- one-dimensional stability ----------------------------------------------------

@dataclass(frozen=True)
class Monotone1D:
    min_eigenvalue: float
    rayleigh: float
    dense_check: float
    el_residual: float
    n: int


def monotone_1d_check(f_prime, f_doubleprime, V, a: float, b: float, n: int = 20000,
                      iters: int = 50) -> Monotone1D:
    """Smallest Dirichlet eigenvalue of ``-phi'' + f''(V) phi`` on ``n`` cells.

    Inverse iteration with a shift below the spectrum, then a Rayleigh quotient;
    ``dense_check`` is the same eigenvalue from a tridiagonal eigensolver.
    """
    x = np.linspace(a, b, n + 1)
    h = (b - a) / n
    v = V(x)
    dv = np.diff(v)
    if not (np.all(dv > 0) or np.all(dv < 0)):
        raise ValueError("V is not strictly monotone on the grid")
    xi = x[1:-1]
    vpp = (v[2:] - 2 * v[1:-1] + v[:-2]) / (h * h)
    el = float(np.max(np.abs(-vpp + f_prime(v[1:-1]))))
    if el > 1e-6:
        raise ValueError(f"V does not solve -V'' + f'(V) = 0 on the grid (residual {el:.2e})")
    pot = f_doubleprime(V(xi))
    diag = 2.0 / (h * h) + pot
    off = np.full(n - 2, -1.0 / (h * h))
    shift = float(np.min(pot)) - 1.0
    ab = np.zeros((3, n - 1))
    ab[0, 1:] = off
    ab[1] = diag - shift
    ab[2, :-1] = off
    phi = np.ones(n - 1)
    phi /= np.linalg.norm(phi)
    for _ in range(iters):
        phi = solve_banded((1, 1), ab, phi)
        phi /= np.linalg.norm(phi)

    def apply(z):
        out = diag * z
        out[1:] += off * z[:-1]
        out[:-1] += off * z[1:]
        return out

    rq = float(phi @ apply(phi))
    dense = float(eigh_tridiagonal(diag, off, select="i", select_range=(0, 0),
                                   eigvals_only=True)[0])
    return Monotone1D(rq, rq, dense, el, n)


def allen_cahn_1d():
    """``(V, V', f, f', f'')`` for ``V = tanh(x / sqrt 2)``, ``f = (1 - V^2)^2 / 4``."""
    r = math.sqrt(2.0)
    return (lambda x: np.tanh(x / r),
            lambda x: (1 - np.tanh(x / r) ** 2) / r,
            lambda v: 0.25 * (1 - v * v) ** 2,
            lambda v: -v * (1 - v * v),
            lambda v: 3 * v * v - 1)


@dataclass(frozen=True)
class Inner1D:
    numeric: float
    closed: float  # int |eta'|^2 |V'|^2
    half_form: float  # one half of closed

    @property
    def defect(self) -> float:
        return abs(self.numeric - self.closed)

    @property
    def half_defect(self) -> float:
        return abs(self.numeric - self.half_form)


def inner_variation_1d_check(a: float = -8.0, b: float = 8.0, center: float = 0.3,
                             radius: float = 2.0, dt: float = 2e-2) -> Inner1D:
    """Second inner variation of the 1D energy at ``tanh(x/sqrt 2)`` along a bump field."""
    V, Vp, f, _, _ = allen_cahn_1d()

    def eta(x):
        s = (x - center) / radius
        inside = np.abs(s) < 1
        q = np.where(inside, 1 - s * s, 1.0)
        return np.where(inside, np.exp(1 - 1 / q), 0.0)

    def etap(x):
        s = (x - center) / radius
        inside = np.abs(s) < 1
        q = np.where(inside, 1 - s * s, 1.0)
        return np.where(inside, np.exp(1 - 1 / q) * (-2 * s / (q * q)) / radius, 0.0)

    _, d2 = numeric_inner_1d(V, Vp, f, eta, etap, a, b, dt)
    closed = inner_second_1d_closed(Vp, etap, a, b)
    return Inner1D(d2, closed, 0.5 * closed)


__all__ = ["threshold_function", "q_closed", "critical_L", "special_eta", "prop41_fields",
           "weak_form_residual", "Prop41Row", "q_quadrature_vs_closed", "Certificate",
           "certificate_check", "poincare_constant", "poincare_check", "sine_samples",
           "random_eta_sweep", "Monotone1D", "monotone_1d_check", "allen_cahn_1d",
           "Inner1D", "inner_variation_1d_check", "LINE_DENSITY"]
