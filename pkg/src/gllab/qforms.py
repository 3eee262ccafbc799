"""Limiting quadratic forms, stress tensors and the Iwaniec-Onninen functional.

Measures are an absolutely continuous node density plus a polyline part.
Line integrals use composite 5-point Gauss-Legendre on subsegments no longer
than the grid spacing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import GridSpec, ScalarField, VectorField, diff
from .innervar import TestVectorField, combine_eta, random_bump_eta

KINDS = ("magnetic_h", "nonmagnetic_U")
GAUSS_ORDER = 5
SINGULAR_MARGIN = 2


# -- measures ---------------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    p0: tuple
    p1: tuple
    density: float | Callable = 1.0

    def __post_init__(self):
        p0 = tuple(float(v) for v in self.p0)
        p1 = tuple(float(v) for v in self.p1)
        if p0 == p1:
            raise ValueError("segment endpoints must differ")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)
        if not callable(self.density) and not math.isfinite(self.density):
            raise ValueError("segment density must be finite")

    @property
    def length(self) -> float:
        return math.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1])

    def density_at(self, x, y) -> np.ndarray:
        if callable(self.density):
            return np.broadcast_to(np.asarray(self.density(x, y), dtype=float), np.shape(x))
        return np.full(np.shape(x), float(self.density))


@dataclass(frozen=True)
class LineMeasurePart:
    segments: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    def inside(self, grid: GridSpec, slack: float = 1e-12) -> bool:
        for sg in self.segments:
            for px, py in (sg.p0, sg.p1):
                if not (grid.x_min - slack <= px <= grid.x_max + slack
                        and grid.y_min - slack <= py <= grid.y_max + slack):
                    return False
        return True


@dataclass(frozen=True, eq=False)
class VorticityMeasure:
    ac_density: ScalarField | None = None
    line_part: LineMeasurePart | None = None

    def total_variation(self, max_sub: float = 1 / 64) -> float:
        tv = 0.0
        if self.ac_density is not None:
            g = self.ac_density.grid
            tv += float(np.sum(g.weights * np.abs(self.ac_density.values)))
        if self.line_part is not None:
            tv += line_integral(lambda x, y: np.ones_like(x), self.line_part, max_sub)
        return tv


def _gauss_points(sg: Segment, max_sub: float):
    xg, wg = np.polynomial.legendre.leggauss(GAUSS_ORDER)
    m = max(1, math.ceil(sg.length / max_sub - 1e-12))
    edges = np.linspace(0.0, 1.0, m + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    s = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel() * sg.length
    x = sg.p0[0] + s * (sg.p1[0] - sg.p0[0])
    y = sg.p0[1] + s * (sg.p1[1] - sg.p0[1])
    return x, y, w


def line_integral(f: Callable, lm: LineMeasurePart, max_sub: float = 1 / 64,
                  signed: bool = False) -> float:
    """``sum_segments int f(x(s), y(s)) |rho| ds`` (``rho`` instead of ``|rho|`` when signed)."""
    if not max_sub > 0:
        raise ValueError("max_sub must be positive")
    total = 0.0
    for sg in lm.segments:
        x, y, w = _gauss_points(sg, max_sub)
        rho = sg.density_at(x, y)
        if not signed:
            rho = np.abs(rho)
        total += float(np.sum(w * rho * np.asarray(f(x, y), dtype=float)))
    return total


# -- limiting fields ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LimitingField:
    """Limiting ``h`` or ``U`` on a grid.

    ``gradient`` optionally supplies exact node gradients; otherwise grid
    differences are used.
    """

    values: ScalarField
    kind: str
    lam: float = 1.0
    gradient: VectorField | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.kind == "magnetic_h" and not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.values.is_complex:
            raise ValueError("limiting fields are real")
        if self.gradient is not None and self.gradient.grid != self.values.grid:
            raise ValueError("gradient must live on the field grid")

    @property
    def grid(self) -> GridSpec:
        return self.values.grid

    @classmethod
    def from_function(cls, grid: GridSpec, func, kind: str, lam: float = 1.0,
                      grad: Callable | None = None) -> "LimitingField":
        X, Y = grid.mesh()
        vals = ScalarField(grid, np.broadcast_to(func(X, Y), grid.shape))
        gv = None
        if grad is not None:
            gx, gy = grad(X, Y)
            gv = VectorField(grid, np.broadcast_to(gx, grid.shape), np.broadcast_to(gy, grid.shape))
        return cls(vals, kind, lam, gv)

    def grad(self) -> tuple[np.ndarray, np.ndarray]:
        if self.gradient is not None:
            return self.gradient.x, self.gradient.y
        g = self.grid
        return diff(self.values.values, g.hx, 0), diff(self.values.values, g.hy, 1)

    def boundary_trace(self) -> np.ndarray:
        return self.values.values[self.grid.boundary_mask]


def _require(fld: LimitingField, kind: str):
    if fld.kind != kind:
        raise ValueError(f"expected a {kind} field, got {fld.kind}")


def _jac_terms(J):
    j11, j12, j21, j22 = J
    frob2 = j11 ** 2 + j12 ** 2 + j21 ** 2 + j22 ** 2
    det = j11 * j22 - j12 * j21
    return frob2, det


def _perp_term(J, p1, p2):
    """|D eta^T v|^2 for v = (p1, p2)."""
    j11, j12, j21, j22 = J
    a = j11 * p1 + j21 * p2
    b = j12 * p1 + j22 * p2
    return a * a + b * b


def _measure_term(mu: VorticityMeasure | None, eta: TestVectorField, grid: GridSpec) -> float:
    """int (|D eta|^2 / 2 - det D eta) d|mu|."""
    if mu is None:
        return 0.0
    total = 0.0
    if mu.ac_density is not None:
        frob2, det = _jac_terms(eta.node_jacobian())
        total += float(np.sum(grid.weights * (0.5 * frob2 - det) * np.abs(mu.ac_density.values)))
    if mu.line_part is not None:
        def integrand(x, y):
            frob2, det = _jac_terms(eta.jacobian(x, y))
            return 0.5 * frob2 - det
        total += line_integral(integrand, mu.line_part, min(grid.hx, grid.hy))
    return total


def q_h(h: LimitingField, mu: VorticityMeasure | None, eta: TestVectorField) -> float:
    """Magnetic limiting form: field terms plus (1/lambda) times the |mu| term."""
    _require(h, "magnetic_h")
    g = h.grid
    J = eta.node_jacobian()
    hx, hy = h.grad()
    hv = h.values.values
    _, det = _jac_terms(J)
    div_eta = J[0] + J[3]
    dens = (_perp_term(J, -hy, hx) - (hx * hx + hy * hy) * det
            + hv * hv * (div_eta ** 2 - det))
    return float(np.sum(g.weights * dens)) + _measure_term(mu, eta, g) / h.lam


def q_u(U: LimitingField, mu: VorticityMeasure | None, eta: TestVectorField) -> float:
    """Nonmagnetic limiting form; the 1/2 multiplies both area terms."""
    _require(U, "nonmagnetic_U")
    g = U.grid
    J = eta.node_jacobian()
    ux, uy = U.grad()
    _, det = _jac_terms(J)
    dens = 0.5 * (_perp_term(J, -uy, ux) - (ux * ux + uy * uy) * det)
    return float(np.sum(g.weights * dens)) + _measure_term(mu, eta, g)


# -- stress tensors --------------------------------------------------------------

def stress_tensor(fld: LimitingField):
    """``(T11, T12, T22)``: ``T_h`` for magnetic fields, ``S_U`` otherwise."""
    fx, fy = fld.grad()
    if fld.kind == "magnetic_h":
        hv = fld.values.values
        iso = 0.5 * (fx * fx + fy * fy + hv * hv)
        return fx * fx - iso, fx * fy, fy * fy - iso
    g2 = fx * fx + fy * fy
    return 2 * fx * fx - g2, 2 * fx * fy, 2 * fy * fy - g2


def stress_tensor_h(h: LimitingField):
    _require(h, "magnetic_h")
    return stress_tensor(h)


def stress_tensor_U(U: LimitingField):
    _require(U, "nonmagnetic_U")
    return stress_tensor(U)


def regular_mask(grid: GridSpec, singular: LineMeasurePart | None = None,
                 margin: int = SINGULAR_MARGIN) -> np.ndarray:
    """Nodes at least ``margin`` cells from the boundary and from every segment."""
    m = np.zeros(grid.shape, dtype=bool)
    m[margin:-margin, margin:-margin] = True
    if singular is None:
        return m
    X, Y = grid.mesh()
    tol = margin * max(grid.hx, grid.hy) * (1 - 1e-9)
    for sg in singular.segments:
        (x0, y0), (x1, y1) = sg.p0, sg.p1
        dxs, dys = x1 - x0, y1 - y0
        t = np.clip(((X - x0) * dxs + (Y - y0) * dys) / (dxs * dxs + dys * dys), 0.0, 1.0)
        dist = np.hypot(X - x0 - t * dxs, Y - y0 - t * dys)
        m &= dist >= tol
    return m


def div_stress_residual(fld: LimitingField, singular: LineMeasurePart | None = None) -> float:
    """Max-norm of the grid divergence of the stress tensor off the singular set.

    Derivatives of the field are always taken with grid differences here.
    """
    g = fld.grid
    plain = LimitingField(fld.values, fld.kind, fld.lam)
    t11, t12, t22 = stress_tensor(plain)
    r1 = diff(t11, g.hx, 0) + diff(t12, g.hy, 1)
    r2 = diff(t12, g.hx, 0) + diff(t22, g.hy, 1)
    mask = regular_mask(g, singular)
    return float(np.max(np.hypot(r1, r2)[mask]))


def hol_residual(U: LimitingField, singular: LineMeasurePart | None = None) -> float:
    """Max-norm of d/dzbar of ``(U_x)^2 - (U_y)^2 - 2i U_x U_y`` off the singular set."""
    g = U.grid
    ux, uy = U.grad()
    W = ux * ux - uy * uy - 2j * ux * uy
    dzb = 0.5 * (diff(W, g.hx, 0) + 1j * diff(W, g.hy, 1))
    return float(np.max(np.abs(dzb)[regular_mask(g, singular)]))


# -- Iwaniec-Onninen functional -------------------------------------------------

@dataclass(frozen=True)
class IwaniecValue:
    complex_form: float
    matrix_form: float  # equals 8 * complex_form

    @property
    def defect(self) -> float:
        return abs(self.matrix_form / 8.0 - self.complex_form)


def iwaniec_lhs(U: LimitingField, eta: TestVectorField) -> IwaniecValue:
    """``1/2 int (|U_z|^2 + |U_zbar|^2)|eta_zbar|^2 - Re int U_z conj(U_zbar) eta_z eta_zbar``
    for ``eta = eta1 + i eta2``, together with the real matrix expression
    ``int (perpU x perpU - |grad U|^2/2 I):(D eta D eta^T - |D eta|^2/2 I)
    + int |grad U|^2 (|D eta|^2/2 - det D eta)``, which is eight times it.
    """
    g = U.grid
    w = g.weights
    ux, uy = U.grad()
    j11, j12, j21, j22 = eta.node_jacobian()
    uz = 0.5 * (ux - 1j * uy)
    uzb = 0.5 * (ux + 1j * uy)
    d1 = j11 + 1j * j21
    d2 = j12 + 1j * j22
    ez = 0.5 * (d1 - 1j * d2)
    ezb = 0.5 * (d1 + 1j * d2)
    cform = (0.5 * np.sum(w * (np.abs(uz) ** 2 + np.abs(uzb) ** 2) * np.abs(ezb) ** 2)
             - np.real(np.sum(w * uz * np.conj(uzb) * ez * ezb)))
    # perp grad U = (-uy, ux)
    p11, p12, p22 = uy * uy, -uy * ux, ux * ux
    g2 = ux * ux + uy * uy
    e11 = j11 * j11 + j12 * j12
    e12 = j11 * j21 + j12 * j22
    e22 = j21 * j21 + j22 * j22
    frob2 = e11 + e22
    det = j11 * j22 - j12 * j21
    a11, a22 = p11 - 0.5 * g2, p22 - 0.5 * g2
    b11, b22 = e11 - 0.5 * frob2, e22 - 0.5 * frob2
    contr = a11 * b11 + 2 * p12 * e12 + a22 * b22
    mform = np.sum(w * contr) + np.sum(w * g2 * (0.5 * frob2 - det))
    return IwaniecValue(float(cform), float(mform))


def eta_library(grid: GridSpec, seed: int = 42, n_base: int = 20, n_comb: int = 5) -> list:
    """``n_base`` seeded sine-bump fields, each followed by ``n_comb`` random
    combinations of the whole base set; ``n_base * n_comb`` fields in total."""
    rng = np.random.default_rng(seed)
    base = [random_bump_eta(grid, rng, name=f"base-{k}") for k in range(n_base)]
    out = []
    for k in range(n_base):
        for m in range(n_comb):
            out.append(combine_eta(base, rng.normal(size=n_base), f"comb-{k}-{m}"))
    return out


ADMISSIBLE_U = {
    "x": (lambda x, y: x, lambda x, y: (np.ones_like(x), np.zeros_like(x))),
    "x2-y2": (lambda x, y: x * x - y * y, lambda x, y: (2 * x, -2 * y)),
    "re-z3": (lambda x, y: x ** 3 - 3 * x * y * y, lambda x, y: (3 * x * x - 3 * y * y, -6 * x * y)),
}


__all__ = ["Segment", "LineMeasurePart", "VorticityMeasure", "LimitingField", "line_integral",
           "q_h", "q_u", "stress_tensor", "stress_tensor_h", "stress_tensor_U",
           "div_stress_residual", "hol_residual", "regular_mask", "IwaniecValue",
           "iwaniec_lhs", "eta_library", "ADMISSIBLE_U", "KINDS"]
