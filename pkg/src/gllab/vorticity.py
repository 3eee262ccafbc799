"""Supercurrent, gauge-invariant vorticity and winding numbers."""
from __future__ import annotations

import math
import warnings

import numpy as np

from .glcore import GLState, covariant_gradient
from .grid import GridSpec, ScalarField, VectorField, diff

CORE_FLOOR = 1e-8


def supercurrent(s: GLState) -> VectorField:
    """``j_k = <iu, d_k^A u> = Re(-i conj(u) d_k^A u)``."""
    d = covariant_gradient(s)
    cu = np.conj(s.u.values)
    return VectorField(s.grid, np.real(-1j * cu * d.x), np.real(-1j * cu * d.y))


def vorticity_mu(s: GLState) -> ScalarField:
    """``curl j + curl A`` at the nodes."""
    g = s.grid
    j = supercurrent(s)
    cj = diff(j.y, g.hx, 0) - diff(j.x, g.hy, 1)
    return ScalarField(g, cj + s.field())


def check_resolution(grid: GridSpec, epsilon: float) -> bool:
    """Warn when the core size is below four cells."""
    ok = epsilon >= 4 * max(grid.hx, grid.hy)
    if not ok:
        warnings.warn(f"epsilon={epsilon} under-resolved: need epsilon >= 4*max(hx, hy) "
                      f"= {4 * max(grid.hx, grid.hy):.4g}", RuntimeWarning, stacklevel=2)
    return ok


def loop_from_box(grid: GridSpec, x0: float, x1: float, y0: float, y1: float):
    """Node-index rectangle ``(i0, i1, j0, j1)`` nearest to the given box."""
    i0 = int(round((x0 - grid.x_min) / grid.hx))
    i1 = int(round((x1 - grid.x_min) / grid.hx))
    j0 = int(round((y0 - grid.y_min) / grid.hy))
    j1 = int(round((y1 - grid.y_min) / grid.hy))
    return i0, i1, j0, j1


def _loop_values(u: np.ndarray, loop) -> np.ndarray:
    i0, i1, j0, j1 = loop
    nx1, ny1 = u.shape
    if not (0 <= i0 < i1 < nx1 and 0 <= j0 < j1 < ny1):
        raise ValueError(f"loop {loop} is not a nondegenerate rectangle inside the grid")
    # counterclockwise: bottom, right, top, left
    return np.concatenate([u[i0:i1, j0], u[i1, j0:j1], u[i1:i0:-1, j1], u[i0, j1:j0:-1]])


def winding_number(u: ScalarField | np.ndarray, loop) -> int:
    """Degree of ``u/|u|`` around the node rectangle ``loop = (i0, i1, j0, j1)``.

    Sums principal-branch phase increments counterclockwise.
    """
    vals = u.values if isinstance(u, ScalarField) else np.asarray(u)
    ring = _loop_values(vals, loop)
    if np.min(np.abs(ring)) < CORE_FLOOR:
        raise ValueError("loop crosses vortex core")
    inc = np.angle(np.roll(ring, -1) / ring)
    return int(round(float(np.sum(inc)) / (2 * math.pi)))


def max_phase_jump(u: ScalarField | np.ndarray, loop) -> float:
    vals = u.values if isinstance(u, ScalarField) else np.asarray(u)
    ring = _loop_values(vals, loop)
    return float(np.max(np.abs(np.angle(np.roll(ring, -1) / ring))))


__all__ = ["supercurrent", "vorticity_mu", "winding_number", "loop_from_box",
           "check_resolution", "max_phase_jump", "CORE_FLOOR"]
