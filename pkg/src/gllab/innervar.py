"""Flow maps of test vector fields, pullbacks, and inner variations.

An inner variation deforms the state by the flow ``Phi_t`` of a vector field
``eta``: ``u_t = u o Phi_t^{-1}`` and ``A_t = (D Phi_t^{-1})^T A o Phi_t^{-1}``.
Numerically the energy of the deformed state is differenced in ``t``; the
closed forms below are its exact first and second ``t``-derivatives written as
area integrals of the undeformed fields.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .glcore import (GLParams, GLState, cov_diff, e_energy, gl_energy, potential_density,
                     _cov_pair)
from .grid import GridSpec, ScalarField, VectorField, diff

SUPPORT_KINDS = ("compact_interior", "boundary_tangent")
RK4_SUBSTEPS = 16
FLOW_GUARD = 0.2


# -- test vector fields ---------------------------------------------------------

def _bump(s, power=None):
    """Bump on |s| < 1 and its derivative.

    ``power=None`` gives the C-infinity profile exp(1 - 1/(1-s^2)); an integer
    k gives (1-s^2)^k, which is C^(k-1) with much smaller high derivatives.
    """
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1
    q = np.where(inside, 1.0 - s * s, 1.0)
    if power is None:
        val = np.where(inside, np.exp(1.0 - 1.0 / q), 0.0)
        der = np.where(inside, val * (-2.0 * s / (q * q)), 0.0)
    else:
        val = np.where(inside, q ** power, 0.0)
        der = np.where(inside, -2.0 * power * s * q ** (power - 1), 0.0)
    return val, der


@dataclass(frozen=True, eq=False)
class TestVectorField:
    """Smooth vector field known through callables.

    ``func(x, y) -> (eta1, eta2)``; ``jac(x, y) -> ((d1 eta1, d2 eta1), (d1 eta2, d2 eta2))``.
    ``support_kind`` is one of :data:`SUPPORT_KINDS` or ``None`` for unrestricted
    fields (flow tests only).
    """

    grid: GridSpec
    func: Callable
    jac: Callable
    support_kind: str | None = "compact_interior"
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    __test__ = False  # keep pytest from collecting the class

    def __post_init__(self):
        if self.support_kind is not None and self.support_kind not in SUPPORT_KINDS:
            raise ValueError(f"unknown support kind {self.support_kind!r}")
        e1, e2 = self.node_values()
        g = self.grid
        if self.support_kind == "compact_interior":
            band = np.ones(g.shape, dtype=bool)
            band[3:-3, 3:-3] = False
            if np.any(e1[band] != 0) or np.any(e2[band] != 0):
                raise ValueError("compact_interior field must vanish within 2 cells of the boundary")
        elif self.support_kind == "boundary_tangent":
            normal = np.concatenate([e1[[0, -1], :].ravel(), e2[:, [0, -1]].ravel()])
            if np.max(np.abs(normal)) > 1e-12:
                raise ValueError("boundary_tangent field has a normal component on the boundary")

    def __call__(self, x, y):
        a, b = self.func(x, y)
        return np.broadcast_to(a, np.shape(x)), np.broadcast_to(b, np.shape(x))

    def jacobian(self, x, y):
        (a, b), (c, d) = self.jac(x, y)
        sh = np.shape(x)
        return tuple(np.broadcast_to(t, sh) for t in (a, b, c, d))

    def node_values(self):
        if "eta" not in self._cache:
            X, Y = self.grid.mesh()
            self._cache["eta"] = self(X, Y)
        return self._cache["eta"]

    @property
    def eta(self) -> VectorField:
        e1, e2 = self.node_values()
        return VectorField(self.grid, e1, e2)

    def node_jacobian(self):
        """(J11, J12, J21, J22) at the nodes, J_ij = d_j eta_i."""
        if "jac" not in self._cache:
            X, Y = self.grid.mesh()
            self._cache["jac"] = self.jacobian(X, Y)
        return self._cache["jac"]

    def zeta_parts(self):
        """zeta = D eta . eta and its Jacobian at the nodes.

        D zeta = (d_eta D eta) + (D eta)^2; the directional derivative of the
        analytic Jacobian is taken by a central difference of step 1e-5.
        """
        if "zeta" not in self._cache:
            X, Y = self.grid.mesh()
            e1, e2 = self.node_values()
            j11, j12, j21, j22 = self.node_jacobian()
            z1 = j11 * e1 + j12 * e2
            z2 = j21 * e1 + j22 * e2
            d = 1e-5
            jp = self.jacobian(X + d * e1, Y + d * e2)
            jm = self.jacobian(X - d * e1, Y - d * e2)
            dj = [(p - m) / (2 * d) for p, m in zip(jp, jm)]
            k11 = dj[0] + j11 * j11 + j12 * j21
            k12 = dj[1] + j11 * j12 + j12 * j22
            k21 = dj[2] + j21 * j11 + j22 * j21
            k22 = dj[3] + j21 * j12 + j22 * j22
            self._cache["zeta"] = (z1, z2, (k11, k12, k21, k22))
        return self._cache["zeta"]

    @property
    def zeta(self) -> VectorField:
        z1, z2, _ = self.zeta_parts()
        return VectorField(self.grid, z1, z2)

    def max_jacobian(self) -> float:
        return float(max(np.max(np.abs(j)) for j in self.node_jacobian()))

    def scaled(self, c: float) -> "TestVectorField":
        return TestVectorField(self.grid, lambda x, y: tuple(c * v for v in self.func(x, y)),
                               lambda x, y: tuple(tuple(c * v for v in row) for row in self.jac(x, y)),
                               self.support_kind, self.name)


def combine_eta(fields, coeffs, name="combination") -> TestVectorField:
    """``sum c_k eta_k`` over fields sharing one grid and support kind."""
    fields = list(fields)
    coeffs = [float(c) for c in coeffs]
    if not fields or len(fields) != len(coeffs):
        raise ValueError("need one coefficient per field")
    grid = fields[0].grid
    kinds = {f.support_kind for f in fields}
    if any(f.grid != grid for f in fields) or len(kinds) != 1:
        raise ValueError("fields must share grid and support kind")

    def func(x, y):
        out = [0.0, 0.0]
        for c, f in zip(coeffs, fields):
            a, b = f.func(x, y)
            out[0] = out[0] + c * a
            out[1] = out[1] + c * b
        return tuple(out)

    def jac(x, y):
        out = [0.0, 0.0, 0.0, 0.0]
        for c, f in zip(coeffs, fields):
            for k, t in enumerate(f.jacobian(x, y)):
                out[k] = out[k] + c * t
        return (out[0], out[1]), (out[2], out[3])

    return TestVectorField(grid, func, jac, kinds.pop(), name)


def zero_eta(grid: GridSpec) -> TestVectorField:
    zero = lambda x, y: (0.0 * x, 0.0 * x)
    return TestVectorField(grid, zero, lambda x, y: ((0.0 * x, 0.0 * x), (0.0 * x, 0.0 * x)),
                           "compact_interior", "zero")


def affine_eta(grid: GridSpec, M, c=(0.0, 0.0)) -> TestVectorField:
    """eta(x) = M x + c (no support restriction)."""
    (m11, m12), (m21, m22) = M
    c1, c2 = c

    def func(x, y):
        return m11 * x + m12 * y + c1, m21 * x + m22 * y + c2

    def jac(x, y):
        one = np.ones_like(np.asarray(x, dtype=float))
        return (m11 * one, m12 * one), (m21 * one, m22 * one)

    return TestVectorField(grid, func, jac, None, "affine")


def bump_eta(grid: GridSpec, center, radius, coeffs, freqs=None, name="bump",
             power=None) -> TestVectorField:
    """Compactly supported field psi(x) psi(y) * trigonometric polynomial.

    ``coeffs`` has shape (2, m, 3): for component c and mode k the term is
    ``coeffs[c,k,0] + coeffs[c,k,1] cos(fx x + fy y) + coeffs[c,k,2] sin(fx x + fy y)``
    with ``(fx, fy) = freqs[k]``.
    """
    cx, cy = center
    rx, ry = (radius, radius) if np.isscalar(radius) else radius
    coeffs = np.asarray(coeffs, dtype=float)
    m = coeffs.shape[1]
    freqs = np.zeros((m, 2)) if freqs is None else np.asarray(freqs, dtype=float)

    def parts(x, y):
        bx, dbx = _bump((x - cx) / rx, power)
        by, dby = _bump((y - cy) / ry, power)
        B = bx * by
        Bx = dbx * by / rx
        By = bx * dby / ry
        P = [0.0, 0.0]
        Px = [0.0, 0.0]
        Py = [0.0, 0.0]
        for k in range(m):
            fx, fy = freqs[k]
            arg = fx * x + fy * y
            cs, sn = np.cos(arg), np.sin(arg)
            for c in range(2):
                a0, a1, a2 = coeffs[c, k]
                P[c] = P[c] + a0 + a1 * cs + a2 * sn
                dphase = -a1 * sn + a2 * cs
                Px[c] = Px[c] + fx * dphase
                Py[c] = Py[c] + fy * dphase
        return B, Bx, By, P, Px, Py

    def func(x, y):
        B, _, _, P, _, _ = parts(x, y)
        return B * P[0], B * P[1]

    def jac(x, y):
        B, Bx, By, P, Px, Py = parts(x, y)
        return ((Bx * P[0] + B * Px[0], By * P[0] + B * Py[0]),
                (Bx * P[1] + B * Px[1], By * P[1] + B * Py[1]))

    return TestVectorField(grid, func, jac, "compact_interior", name)


def random_bump_eta(grid: GridSpec, rng: np.random.Generator, modes: int = 3,
                    margin_cells: int = 4, name="random-bump") -> TestVectorField:
    """Seeded random bump field supported in a random sub-box of the grid."""
    w = grid.x_max - grid.x_min
    hgt = grid.y_max - grid.y_min
    mx = margin_cells * grid.hx
    my = margin_cells * grid.hy
    rx = rng.uniform(0.25, 0.5) * w
    ry = rng.uniform(0.25, 0.5) * hgt
    rx = min(rx, 0.5 * w - mx)
    ry = min(ry, 0.5 * hgt - my)
    cx = rng.uniform(grid.x_min + mx + rx, grid.x_max - mx - rx)
    cy = rng.uniform(grid.y_min + my + ry, grid.y_max - my - ry)
    coeffs = rng.normal(size=(2, modes, 3))
    freqs = rng.uniform(-1.5, 1.5, size=(modes, 2)) * (2 * np.pi / min(w, hgt))
    return bump_eta(grid, (cx, cy), (rx, ry), coeffs, freqs, name)


def tangent_sine_eta(grid: GridSpec, amp=(0.3, -0.2), freq=(0.3, 0.4),
                     name="tangent-sine") -> TestVectorField:
    """Boundary-tangent field ``(a1 sin(kx (x-x_min)) cos(b1 y), a2 sin(ky (y-y_min)) cos(b2 x))``.

    ``kx = pi / width`` so the normal component vanishes on every side; the
    flow maps the rectangle onto itself.
    """
    a1, a2 = amp
    b1, b2 = freq
    x0, y0 = grid.x_min, grid.y_min
    kx = math.pi / (grid.x_max - grid.x_min)
    ky = math.pi / (grid.y_max - grid.y_min)

    def func(x, y):
        return (a1 * np.sin(kx * (x - x0)) * np.cos(b1 * y),
                a2 * np.sin(ky * (y - y0)) * np.cos(b2 * x))

    def jac(x, y):
        sx, cx = np.sin(kx * (x - x0)), np.cos(kx * (x - x0))
        sy, cy = np.sin(ky * (y - y0)), np.cos(ky * (y - y0))
        return ((a1 * kx * cx * np.cos(b1 * y), -a1 * b1 * sx * np.sin(b1 * y)),
                (-a2 * b2 * sy * np.sin(b2 * x), a2 * ky * cy * np.cos(b2 * x)))

    return TestVectorField(grid, func, jac, "boundary_tangent", name)


def _flow_rhs(eta: TestVectorField, sign, X, Y, J):
    e1, e2 = eta(X, Y)
    a, b, c, d = eta.jacobian(X, Y)
    j11, j12, j21, j22 = J
    dJ = (a * j11 + b * j21, a * j12 + b * j22, c * j11 + d * j21, c * j12 + d * j22)
    return sign * e1, sign * e2, tuple(sign * v for v in dJ)


def _integrate(eta: TestVectorField, t: float, X, Y, substeps: int):
    """RK4 for x' = eta(x) together with the variational equation J' = D eta(x) J."""
    X = np.array(X, dtype=float)
    Y = np.array(Y, dtype=float)
    one, zero = np.ones_like(X), np.zeros_like(X)
    J = (one, zero, zero.copy(), one.copy())
    if t == 0:
        return X, Y, J
    sign = 1.0 if t > 0 else -1.0
    h = abs(t) / substeps
    for _ in range(substeps):
        k1 = _flow_rhs(eta, sign, X, Y, J)
        k2 = _flow_rhs(eta, sign, X + 0.5 * h * k1[0], Y + 0.5 * h * k1[1],
                       tuple(j + 0.5 * h * k for j, k in zip(J, k1[2])))
        k3 = _flow_rhs(eta, sign, X + 0.5 * h * k2[0], Y + 0.5 * h * k2[1],
                       tuple(j + 0.5 * h * k for j, k in zip(J, k2[2])))
        k4 = _flow_rhs(eta, sign, X + h * k3[0], Y + h * k3[1],
                       tuple(j + h * k for j, k in zip(J, k3[2])))
        X = X + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        Y = Y + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        J = tuple(j + h / 6 * (a + 2 * b + 2 * c + d)
                  for j, a, b, c, d in zip(J, k1[2], k2[2], k3[2], k4[2]))
    return X, Y, J


@dataclass(frozen=True, eq=False)
class FlowMap:
    eta: TestVectorField
    t: float
    forward: tuple  # (X, Y) = Phi_t(nodes)
    inverse: tuple  # Phi_t^{-1}(nodes)
    jac_forward: tuple  # D Phi_t at the nodes, (J11, J12, J21, J22)
    jac_inverse: tuple  # D Phi_t^{-1} at the nodes

    def composition_error(self, substeps: int = RK4_SUBSTEPS) -> float:
        """max |Phi_t^{-1}(Phi_t(x)) - x| over the nodes."""
        X, Y = self.eta.grid.mesh()
        bx, by, _ = _integrate(self.eta, -self.t, *self.forward, substeps)
        return float(max(np.max(np.abs(bx - X)), np.max(np.abs(by - Y))))


def flow(eta: TestVectorField, t: float, substeps: int = RK4_SUBSTEPS) -> FlowMap:
    """Flow of eta for time t at the grid nodes, with Jacobians, by fixed-step RK4."""
    if substeps < RK4_SUBSTEPS:
        raise ValueError(f"need at least {RK4_SUBSTEPS} RK4 substeps")
    if abs(t) * eta.max_jacobian() > FLOW_GUARD:
        raise ValueError(f"|t| max|D eta| = {abs(t) * eta.max_jacobian():.3g} exceeds {FLOW_GUARD}")
    X, Y = eta.grid.mesh()
    fx, fy, fJ = _integrate(eta, t, X, Y, substeps)
    ix, iy, iJ = _integrate(eta, -t, X, Y, substeps)
    for J in (fJ, iJ):
        if np.any(J[0] * J[3] - J[1] * J[2] <= 0):
            raise ValueError("flow Jacobian lost positivity")
    return FlowMap(eta, t, (fx, fy), (ix, iy), fJ, iJ)


class _Sampler:
    """Quintic tensor spline interpolant of node data (C^4 in the sample point)."""

    def __init__(self, grid: GridSpec, values: np.ndarray, degree: int = 5):
        self.grid = grid
        self.spline = RectBivariateSpline(grid.x, grid.y, values, kx=degree, ky=degree, s=0)

    def __call__(self, X, Y):
        return self.spline.ev(X, Y)


def _clamped(grid: GridSpec, X, Y):
    cx = np.clip(X, grid.x_min, grid.x_max)
    cy = np.clip(Y, grid.y_min, grid.y_max)
    if np.any(cx != X) or np.any(cy != Y):
        warnings.warn("pullback sample outside the domain was clamped", RuntimeWarning)
    return cx, cy


def pullback_scalar(f: np.ndarray, grid: GridSpec, fm: FlowMap) -> np.ndarray:
    if fm.t == 0:
        return np.array(f)
    X, Y = _clamped(grid, *fm.inverse)
    if np.iscomplexobj(f):
        return _Sampler(grid, f.real)(X, Y) + 1j * _Sampler(grid, f.imag)(X, Y)
    return _Sampler(grid, f)(X, Y)


def pullback_state(s: GLState, fm: FlowMap) -> GLState:
    """(u o Phi^{-1}, (D Phi^{-1})^T A o Phi^{-1})."""
    g = s.grid
    if fm.t == 0:
        return s
    X, Y = _clamped(g, *fm.inverse)
    u = s.u.values
    ut = _Sampler(g, u.real)(X, Y) + 1j * _Sampler(g, u.imag)(X, Y)
    a1 = _Sampler(g, s.A.x)(X, Y)
    a2 = _Sampler(g, s.A.y)(X, Y)
    j11, j12, j21, j22 = fm.jac_inverse
    return GLState.from_arrays(g, ut, j11 * a1 + j21 * a2, j12 * a1 + j22 * a2)


# -- numeric inner variations -------------------------------------------------

@dataclass(frozen=True)
class InnerVariationResult:
    d1: float
    d2: float
    dt: float
    levels: tuple  # ((dt_k, d1_k, d2_k), ...) for dt, dt/2, dt/4
    richardson_order: tuple  # observed orders (d1, d2) from the three levels


def _observed_order(v0, v1, v2):
    a, b = abs(v0 - v1), abs(v1 - v2)
    if a == 0 or b == 0:
        return float("nan")
    return math.log2(a / b)


def numeric_inner_variations(s, p: GLParams | None, eta: TestVectorField, dt: float,
                             functional: str = "gl") -> InnerVariationResult:
    """Central differences of t -> energy(pullback(s, flow(eta, t))) with Richardson.

    ``functional`` is ``"gl"`` (``s`` a GLState) or ``"e"`` (``s`` a complex
    ScalarField, ``p`` supplies epsilon).
    """
    if functional == "gl":
        def G(t):
            return gl_energy(pullback_state(s, flow(eta, t)), p)
    elif functional == "e":
        def G(t):
            ut = pullback_scalar(s.values, s.grid, flow(eta, t))
            return e_energy(ScalarField(s.grid, ut), p.epsilon)
    else:
        raise ValueError(f"unknown functional {functional!r}")
    g0 = G(0.0)
    levels = []
    for k in range(3):
        h = dt / 2 ** k
        gp, gm = G(h), G(-h)
        levels.append((h, (gp - gm) / (2 * h), (gp - 2 * g0 + gm) / (h * h)))
    d1 = (4 * levels[2][1] - levels[1][1]) / 3
    d2 = (4 * levels[2][2] - levels[1][2]) / 3
    orders = (_observed_order(*(lv[1] for lv in levels)),
              _observed_order(*(lv[2] for lv in levels)))
    return InnerVariationResult(d1, d2, dt, tuple(levels), orders)


# -- closed forms -----------------------------------------------------------------

def _gram(d1, d2):
    g11 = np.abs(d1) ** 2
    g22 = np.abs(d2) ** 2
    g12 = np.real(np.conj(d1) * d2)
    return g11, g12, g22


def _gradient_terms(G, J, K):
    """First and second inner-variation integrands of 0.5|M|^2 given the Gram
    matrix G = M^T M, J = D eta and K = D zeta."""
    g11, g12, g22 = G
    j11, j12, j21, j22 = J
    k11, k12, k21, k22 = K
    trG = g11 + g22
    div_eta = j11 + j22
    det_eta = j11 * j22 - j12 * j21
    gj = g11 * j11 + g12 * (j12 + j21) + g22 * j22  # G : D eta
    first = 0.5 * trG * div_eta - gj
    gk = g11 * k11 + g12 * (k12 + k21) + g22 * k22
    # |M D eta|^2 = tr(D eta^T G D eta)
    mj = (g11 * (j11 * j11 + j12 * j12) + 2 * g12 * (j11 * j21 + j12 * j22)
          + g22 * (j21 * j21 + j22 * j22))
    second = 0.5 * trG * (k11 + k22) - gk + mj - trG * det_eta
    return first, second


def _closed_common(grid, d1, d2, u, epsilon, eta):
    J = eta.node_jacobian()
    _, _, K = eta.zeta_parts()
    first, second = _gradient_terms(_gram(d1, d2), J, K)
    P = potential_density(u, epsilon)
    div_eta = J[0] + J[3]
    det_eta = J[0] * J[3] - J[1] * J[2]
    div_zeta = K[0] + K[3]
    first = first + P * div_eta
    second = second + P * (div_zeta + 2 * det_eta)
    return first, second, div_eta, det_eta, div_zeta


def closed_inner(s: GLState, p: GLParams, eta: TestVectorField) -> tuple[float, float]:
    """First and second inner variations of the GL energy from their integrands.

    Includes the applied-field contributions ``0.5 h_ex^2 div eta`` and
    ``h_ex^2 (div zeta / 2 + det D eta)``; both integrate to zero for compactly
    supported or boundary-tangent fields on a rectangle.
    """
    g = s.grid
    d1, d2 = _cov_pair(s)
    first, second, div_eta, det_eta, div_zeta = _closed_common(
        g, d1, d2, s.u.values, p.epsilon, eta)
    h = s.field()
    hx2 = p.h_ex ** 2
    first = first + 0.5 * (hx2 - h * h) * div_eta
    second = (second + h * h * (div_eta ** 2 - 0.5 * div_zeta - det_eta)
              + hx2 * (0.5 * div_zeta + det_eta))
    w = g.weights
    return float(np.sum(w * first)), float(np.sum(w * second))


def closed_first_inner(s: GLState, p: GLParams, eta: TestVectorField) -> float:
    return closed_inner(s, p, eta)[0]


def closed_second_inner(s: GLState, p: GLParams, eta: TestVectorField) -> float:
    return closed_inner(s, p, eta)[1]


def closed_inner_E(u: ScalarField, epsilon: float, eta: TestVectorField) -> tuple[float, float]:
    g = u.grid
    v = u.values
    d1, d2 = diff(v, g.hx, 0), diff(v, g.hy, 1)
    first, second, *_ = _closed_common(g, d1, d2, v, epsilon, eta)
    w = g.weights
    return float(np.sum(w * first)), float(np.sum(w * second))


# -- outer variations ----------------------------------------------------------

def outer_variations(s: GLState, p: GLParams, v, B: VectorField) -> tuple[float, float]:
    """First and second derivative of t -> GL(u + t v, A + t B) at t = 0.

    Computed exactly for the discrete energy: the link phases are linear in A,
    so the t-derivatives of each stencil term are closed-form.
    """
    g = s.grid
    w = g.weights
    u = s.u.values
    v = v.values if isinstance(v, ScalarField) else np.asarray(v, dtype=complex)
    b1, b2 = B.x, B.y
    eps2 = p.epsilon ** 2
    d1 = d2 = 0.0
    for axis, a, b, h in ((0, s.A.x, b1, g.hx), (1, s.A.y, b2, g.hy)):
        D = cov_diff(u, a, h, axis)
        D1 = cov_diff(v, a, h, axis) + cov_diff(u, a, h, axis, b, 1)
        D2 = 2 * cov_diff(v, a, h, axis, b, 1) + cov_diff(u, a, h, axis, b, 2)
        d1 += np.sum(w * np.real(np.conj(D) * D1))
        d2 += np.sum(w * (np.abs(D1) ** 2 + np.real(np.conj(D) * D2)))
    m = 1.0 - np.abs(u) ** 2
    uv = np.real(np.conj(u) * v)
    d1 += np.sum(w * (-m * uv / eps2))
    d2 += np.sum(w * (2 * uv * uv - m * np.abs(v) ** 2) / eps2)
    cb = diff(b2, g.hx, 0) - diff(b1, g.hy, 1)
    d1 += np.sum(w * (s.field() - p.h_ex) * cb)
    d2 += np.sum(w * cb * cb)
    return float(d1), float(d2)


def _hessian2(f, g: GridSpec):
    fx, fy = diff(f, g.hx, 0), diff(f, g.hy, 1)
    return fx, fy, diff(fx, g.hx, 0), 0.5 * (diff(fx, g.hy, 1) + diff(fy, g.hx, 0)), diff(fy, g.hy, 1)


def inner_outer_link_check(s: GLState, p: GLParams, eta: TestVectorField) -> dict:
    """Second inner variation versus the outer-variation expression.

    The outer directions are
    ``v1 = -Du eta``, ``B1 = -DA eta - D eta^T A``,
    ``v2 = D^2u[eta, eta] + Du zeta``,
    ``B2 = D^2A[eta, eta] + DA zeta + D zeta^T A + 2 D eta^T DA eta``.
    """
    g = s.grid
    e1, e2 = eta.node_values()
    z1, z2, K = eta.zeta_parts()
    j11, j12, j21, j22 = eta.node_jacobian()
    k11, k12, k21, k22 = K

    def first_second(f):
        fx, fy, fxx, fxy, fyy = _hessian2(f, g)
        d_eta = fx * e1 + fy * e2
        d_zeta = fx * z1 + fy * z2
        hess = fxx * e1 * e1 + 2 * fxy * e1 * e2 + fyy * e2 * e2
        return fx, fy, d_eta, d_zeta, hess

    u = s.u.values
    _, _, ue, uz, uhh = first_second(u)
    a1, a2 = s.A.x, s.A.y
    a1x, a1y, a1e, a1z, a1hh = first_second(a1)
    a2x, a2y, a2e, a2z, a2hh = first_second(a2)
    v1 = -ue
    B1 = VectorField(g, -a1e - (j11 * a1 + j21 * a2), -a2e - (j12 * a1 + j22 * a2))
    v2 = uhh + uz
    # D eta^T (DA eta): DA eta = (a1e, a2e)
    B2 = VectorField(
        g,
        a1hh + a1z + (k11 * a1 + k21 * a2) + 2 * (j11 * a1e + j21 * a2e),
        a2hh + a2z + (k12 * a1 + k22 * a2) + 2 * (j12 * a1e + j22 * a2e))
    lhs = closed_second_inner(s, p, eta)
    first_dir, _ = outer_variations(s, p, v2, B2)
    _, second_dir = outer_variations(s, p, v1, B1)
    rhs = first_dir + second_dir
    return {"lhs": lhs, "rhs": rhs, "defect": abs(lhs - rhs)}


# -- algebraic identities ------------------------------------------------------

def identity_checks(eta: TestVectorField, points, M=None, N=None, ts=(1e-2, 5e-3, 2.5e-3)):
    """Pointwise trace/determinant identity and the determinant expansion.

    Returns a dict with the identity defects at ``points`` and, for 2x2
    matrices ``M, N``, the remainders of
    det(I + tM + t^2/2 N) - [1 + t tr M + t^2 (tr N / 2 + det M)].
    """
    pts = np.asarray(points, dtype=float)
    a, b, c, d = eta.jacobian(pts[:, 0], pts[:, 1])
    div_eta = a + d
    tr_sq = a * a + 2 * b * c + d * d
    det = a * d - b * c
    out = {"trace_identity": {"lhs": div_eta ** 2 - tr_sq, "rhs": 2 * det,
                              "defect": np.abs(div_eta ** 2 - tr_sq - 2 * det)}}
    if M is not None:
        M = np.asarray(M, dtype=float)
        N = np.asarray(N, dtype=float)
        rem = []
        for t in ts:
            exact = np.linalg.det(np.eye(2) + t * M + 0.5 * t * t * N)
            approx = 1 + t * np.trace(M) + t * t * (0.5 * np.trace(N) + np.linalg.det(M))
            rem.append(abs(exact - approx))
        ts_arr = np.asarray(ts)
        rem = np.asarray(rem)
        slope = np.polyfit(np.log(ts_arr), np.log(rem), 1)[0] if np.all(rem > 0) else float("nan")
        coef = np.linalg.lstsq(ts_arr[:, None] ** 3, rem, rcond=None)[0][0]
        out["det_expansion"] = {"t": ts_arr, "remainder": rem, "loglog_slope": slope,
                                "cubic_coefficient": coef}
    return out


# -- one-dimensional reduction ------------------------------------------------

def _gauss_nodes(a, b, panels, order=8):
    xg, wg = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    return x, w


def inner_second_1d_closed(Vp, etap, a, b, panels=400):
    """int_a^b |eta'|^2 |V'|^2, the second inner variation of the 1D energy at a critical V."""
    x, w = _gauss_nodes(a, b, panels)
    return float(np.sum(w * etap(x) ** 2 * Vp(x) ** 2))


def _flow_1d(eta, etap, t, x, substeps=64):
    """Phi_t(x) and Phi_t'(x) for the 1D field eta by RK4."""
    y = np.array(x, dtype=float)
    J = np.ones_like(y)
    if t == 0:
        return y, J
    h = t / substeps
    for _ in range(substeps):
        k1y, k1j = eta(y), etap(y) * J
        k2y, k2j = eta(y + 0.5 * h * k1y), etap(y + 0.5 * h * k1y) * (J + 0.5 * h * k1j)
        k3y, k3j = eta(y + 0.5 * h * k2y), etap(y + 0.5 * h * k2y) * (J + 0.5 * h * k2j)
        k4y, k4j = eta(y + h * k3y), etap(y + h * k3y) * (J + h * k3j)
        y = y + h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
        J = J + h / 6 * (k1j + 2 * k2j + 2 * k3j + k4j)
    return y, J


def numeric_inner_1d(V, Vp, f, eta, etap, a, b, dt=2e-2, panels=400):
    """Central second difference in t of E(V o Phi_t^{-1}), E(V) = int V'^2/2 + f(V).

    The deformed profile is evaluated through the inverse flow, so no
    interpolation is involved; Richardson over dt and dt/2.
    """
    x, w = _gauss_nodes(a, b, panels)

    def E(t):
        y, J = _flow_1d(eta, etap, -t, x)
        Vt = V(y)
        Vtp = Vp(y) * J
        return float(np.sum(w * (0.5 * Vtp ** 2 + f(Vt))))

    e0 = E(0.0)
    out = []
    for h in (dt, dt / 2):
        ep, em = E(h), E(-h)
        out.append(((ep - em) / (2 * h), (ep - 2 * e0 + em) / (h * h)))
    d1 = (4 * out[1][0] - out[0][0]) / 3
    d2 = (4 * out[1][1] - out[0][1]) / 3
    return d1, d2
