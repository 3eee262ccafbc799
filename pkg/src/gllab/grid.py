"""Structured node grid, collocated difference operators and trapezoid quadrature.

Arrays are indexed ``[i, j]`` with ``x = x_min + i*hx`` along axis 0 and
``y = y_min + j*hy`` along axis 1, so a field on an ``nx x ny`` cell grid has
shape ``(nx+1, ny+1)``.  Flattening is C order (row-major in that layout).
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("grid needs x_min < x_max and y_min < y_max")
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("cell counts must be integers")
        if self.nx < 8 or self.ny < 8:
            raise ValueError("grid needs at least 8 cells per direction")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))

    @classmethod
    def square(cls, half_width: float, n: int, center=(0.0, 0.0)) -> "GridSpec":
        cx, cy = center
        return cls(cx - half_width, cx + half_width, cy - half_width, cy + half_width, n, n)

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def hy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx + 1, self.ny + 1)

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx + 1)

    @cached_property
    def y(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny + 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights at the nodes."""
        wx = np.full(self.nx + 1, self.hx)
        wx[[0, -1]] *= 0.5
        wy = np.full(self.ny + 1, self.hy)
        wy[[0, -1]] *= 0.5
        w = np.outer(wx, wy)
        w.setflags(write=False)
        return w

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[[0, -1], :] = True
        m[:, [0, -1]] = True
        m.setflags(write=False)
        return m

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "y_min": self.y_min,
                "y_max": self.y_max, "nx": self.nx, "ny": self.ny}

    def spacing(self, axis: int) -> float:
        return self.hx if axis == 0 else self.hy


def _frozen(a, dtype=None) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _check_values(grid: GridSpec, a: np.ndarray, what: str):
    if a.shape != grid.shape:
        raise ValueError(f"{what}: expected shape {grid.shape}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what}: non-finite values")


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Node values of a real or complex scalar on ``grid``."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        dtype = complex if np.iscomplexobj(v) else float
        v = _frozen(v, dtype)
        _check_values(self.grid, v, "ScalarField")
        object.__setattr__(self, "values", v)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: GridSpec
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        cx, cy = np.asarray(self.x), np.asarray(self.y)
        dtype = complex if (np.iscomplexobj(cx) or np.iscomplexobj(cy)) else float
        for name, c in (("x", cx), ("y", cy)):
            c = _frozen(c, dtype)
            _check_values(self.grid, c, "VectorField")
            object.__setattr__(self, name, c)

    @property
    def components(self) -> tuple[np.ndarray, np.ndarray]:
        return self.x, self.y


# -- 1D difference stencils -------------------------------------------------

def diff(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Centered first difference along ``axis``, second-order one-sided at the ends."""
    f = np.moveaxis(np.asarray(f), axis, 0)
    out = np.empty_like(f, dtype=np.result_type(f, float))
    out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    out[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
    out[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    return np.moveaxis(out, 0, axis)


def diff_adjoint(g: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Transpose of :func:`diff` (same axis, same spacing)."""
    g = np.moveaxis(np.asarray(g), axis, 0)
    out = np.zeros_like(g, dtype=np.result_type(g, float))
    c = 1.0 / (2 * h)
    out[2:] += c * g[1:-1]
    out[:-2] -= c * g[1:-1]
    out[0] += -3 * c * g[0]
    out[1] += 4 * c * g[0]
    out[2] += -c * g[0]
    out[-1] += 3 * c * g[-1]
    out[-2] += -4 * c * g[-1]
    out[-3] += c * g[-1]
    return np.moveaxis(out, 0, axis)


def dx(grid: GridSpec, f: np.ndarray) -> np.ndarray:
    return diff(f, grid.hx, 0)


def dy(grid: GridSpec, f: np.ndarray) -> np.ndarray:
    return diff(f, grid.hy, 1)


# -- public field operators -------------------------------------------------

def integrate(f: ScalarField | np.ndarray, grid: GridSpec | None = None) -> float:
    """Composite trapezoid rule over the rectangle."""
    if isinstance(f, ScalarField):
        grid, vals = f.grid, f.values
    else:
        vals = np.asarray(f)
        if grid is None:
            raise ValueError("raw arrays need a grid")
    if not np.all(np.isfinite(vals)):
        raise ValueError("integrate: non-finite values")
    return np.sum(grid.weights * vals)


def grad(f: ScalarField) -> VectorField:
    g = f.grid
    return VectorField(g, dx(g, f.values), dy(g, f.values))


def div(v: VectorField) -> ScalarField:
    g = v.grid
    return ScalarField(g, dx(g, v.x) + dy(g, v.y))


def curl(v: VectorField) -> ScalarField:
    g = v.grid
    return ScalarField(g, dx(g, v.y) - dy(g, v.x))


def perp_grad(f: ScalarField) -> VectorField:
    g = f.grid
    return VectorField(g, -dy(g, f.values), dx(g, f.values))


def sample(grid: GridSpec, func) -> ScalarField:
    X, Y = grid.mesh()
    return ScalarField(grid, np.broadcast_to(func(X, Y), grid.shape))


def sample_vector(grid: GridSpec, func) -> VectorField:
    X, Y = grid.mesh()
    a, b = func(X, Y)
    return VectorField(grid, np.broadcast_to(a, grid.shape), np.broadcast_to(b, grid.shape))


# -- field files ----------------------------------------------------------------


def write_field(path, field: ScalarField | VectorField) -> None:
    """JSON header line followed by CSV node values (17 significant digits)."""
    grid = field.grid
    if isinstance(field, VectorField):
        if np.iscomplexobj(field.x):
            raise ValueError("complex vector fields have no file representation")
        cols = [field.x.ravel(), field.y.ravel()]
        kind = "vector"
    elif field.is_complex:
        cols = [field.values.real.ravel(), field.values.imag.ravel()]
        kind = "vector"
    else:
        cols = [field.values.ravel()]
        kind = "scalar"
    header = {"grid": grid.to_dict(), "kind": kind}
    buf = io.StringIO()
    buf.write(json.dumps(header, sort_keys=True) + "\n")
    for row in zip(*cols):
        buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
    Path(path).write_text(buf.getvalue())


def read_field(path, as_complex: bool = False) -> ScalarField | VectorField:
    text = Path(path).read_text().splitlines()
    if not text:
        raise ValueError(f"{path}: empty field file")
    header = json.loads(text[0])
    grid = GridSpec(**header["grid"])
    data = np.loadtxt(io.StringIO("\n".join(text[1:])), delimiter=",", ndmin=2)
    kind = header["kind"]
    ncol = 1 if kind == "scalar" else 2
    if data.shape != (grid.shape[0] * grid.shape[1], ncol):
        raise ValueError(f"{path}: expected {grid.shape[0] * grid.shape[1]} rows of {ncol} columns")
    if kind == "scalar":
        return ScalarField(grid, data[:, 0].reshape(grid.shape))
    a, b = data[:, 0].reshape(grid.shape), data[:, 1].reshape(grid.shape)
    if as_complex:
        return ScalarField(grid, a + 1j * b)
    return VectorField(grid, a, b)
