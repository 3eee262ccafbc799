"""Discrete critical points of the GL energy by gradient descent.

The descent direction is the lumped-mass (L^2) gradient ``-g / w``.  Trial
steps come from the Barzilai-Borwein formula and are backtracked until the
Armijo condition holds, so every accepted step lowers the energy.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .glcore import GLParams, GLState, coulomb_project, energy_gradient, gl_energy
from .grid import GridSpec, ScalarField

MAX_DEGREE = 8
STEP_FLOOR = 1e-14


@dataclass(frozen=True)
class SolveConfig:
    max_iters: int = 5000
    step0: float = 1e-3
    tol_grad: float = 1e-5
    armijo_c: float = 1e-4
    gauge_every: int = 200
    max_step: float = 1.0

    def __post_init__(self):
        if self.max_iters < 0 or int(self.max_iters) != self.max_iters:
            raise ValueError("max_iters must be a nonnegative integer")
        for name in ("step0", "tol_grad", "max_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must lie in (0, 1)")
        if self.gauge_every < 1:
            raise ValueError("gauge_every must be at least 1")


class StepUnderflow(RuntimeError):
    pass


@dataclass
class SolveLog:
    rows: list = field(default_factory=list)  # (iter, energy, grad_norm, step)
    converged: bool = False
    reason: str = ""

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["iter", "energy", "grad_norm", "step"])
            for it, e, gn, st in self.rows:
                wr.writerow([it, f"{e:.17g}", f"{gn:.17g}", f"{st:.17g}"])

    @property
    def energies(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])


def _pack(s: GLState) -> np.ndarray:
    u = s.u.values
    return np.stack([u.real, u.imag, s.A.x, s.A.y])


def _unpack(grid: GridSpec, x: np.ndarray) -> GLState:
    return GLState.from_arrays(grid, x[0] + 1j * x[1], x[2], x[3])


def _gradient(s: GLState, p: GLParams) -> np.ndarray:
    gu, ga1, ga2 = energy_gradient(s, p)
    return np.stack([gu.real, gu.imag, ga1, ga2])


def el_residual(s: GLState, p: GLParams) -> tuple[float, float, float]:
    """Max-norm Euler-Lagrange residuals ``(r1, r2, r3)``.

    ``r1`` is the order-parameter equation at every node and ``r2`` the
    current equation at interior nodes, both taken as the lumped-mass gradient
    of the discrete energy; ``r3`` is ``max |h - h_ex|`` on the boundary.
    """
    s = coulomb_project(s)
    g = s.grid
    w = g.weights
    gu, ga1, ga2 = energy_gradient(s, p)
    r1 = float(np.max(np.abs(gu) / w))
    ra = np.hypot(ga1, ga2) / w
    r2 = float(np.max(ra[1:-1, 1:-1]))
    h = s.field()
    r3 = float(np.max(np.abs(h - p.h_ex)[g.boundary_mask]))
    return r1, r2, r3


def minimize_gl(s0: GLState, p: GLParams, cfg: SolveConfig = SolveConfig(),
                log: SolveLog | None = None) -> GLState:
    """Armijo-backtracked gradient descent with periodic Coulomb re-projection.

    ``grad_norm`` is the max-norm of the lumped-mass gradient over all nodes.
    Raises :class:`StepUnderflow` if backtracking drives the step below 1e-14.
    The returned state is in Coulomb gauge.
    """
    g = s0.grid
    w = g.weights
    log = SolveLog() if log is None else log
    s = coulomb_project(s0)
    x = _pack(s)
    e = gl_energy(s, p)
    gr = _gradient(s, p)
    d = -gr / w
    gnorm = float(np.max(np.abs(d)))
    log.rows.append((0, e, gnorm, 0.0))
    step = cfg.step0
    for it in range(1, cfg.max_iters + 1):
        if gnorm <= cfg.tol_grad:
            log.converged, log.reason = True, "tol_grad"
            return coulomb_project(_unpack(g, x))
        slope = float(np.sum(gr * d))
        t = step
        while True:
            xn = x + t * d
            sn = _unpack(g, xn)
            en = gl_energy(sn, p)
            if en <= e + cfg.armijo_c * t * slope:
                break
            t *= 0.5
            if t < STEP_FLOOR:
                raise StepUnderflow(
                    f"step underflow at iteration {it}: energy {e:.17g}, grad_norm {gnorm:.3e}")
        grn = _gradient(sn, p)
        if it % cfg.gauge_every == 0:
            # gauge maps leave the energy unchanged but spoil the secant pair
            sn = coulomb_project(sn)
            xn = _pack(sn)
            grn = _gradient(sn, p)
            step = t
        else:
            # Barzilai-Borwein step in the lumped-mass metric
            sk = xn - x
            yk = grn - gr
            sy = float(np.sum(sk * yk))
            ss = float(np.sum(w * sk * sk))
            step = min(ss / sy, cfg.max_step) if sy > 0 else cfg.step0
        dn = -grn / w
        x, e, gr, d = xn, en, grn, dn
        gnorm = float(np.max(np.abs(d)))
        log.rows.append((it, e, gnorm, t))
    if gnorm <= cfg.tol_grad:
        log.converged, log.reason = True, "tol_grad"
    else:
        log.reason = "max_iters"
    # the discrete energy is gauge invariant, so the final projection is free
    return coulomb_project(_unpack(g, x))


def vortex_ansatz(grid: GridSpec, center, degree: int, epsilon: float) -> ScalarField:
    """``tanh(|x-c|/eps) exp(i d theta)`` about ``center``."""
    if int(degree) != degree:
        raise ValueError("degree must be an integer")
    if abs(degree) > MAX_DEGREE:
        raise ValueError(f"|degree| <= {MAX_DEGREE} required, got {degree}")
    cx, cy = center
    if not (grid.x_min < cx < grid.x_max and grid.y_min < cy < grid.y_max):
        raise ValueError("vortex center must be interior")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    X, Y = grid.mesh()
    dxc, dyc = X - cx, Y - cy
    r = np.hypot(dxc, dyc)
    theta = np.arctan2(dyc, dxc)
    return ScalarField(grid, np.tanh(r / epsilon) * np.exp(1j * int(degree) * theta))


def solve_vortex(grid: GridSpec, p: GLParams, degree: int = 1, center=(0.0, 0.0),
                 cfg: SolveConfig = SolveConfig(), log: SolveLog | None = None) -> GLState:
    u0 = vortex_ansatz(grid, center, degree, p.epsilon)
    s0 = GLState(u0, GLState.from_arrays(grid, 0, 0, 0).A)
    return minimize_gl(s0, p, cfg, log)


__all__ = ["SolveConfig", "SolveLog", "StepUnderflow", "el_residual", "minimize_gl",
           "vortex_ansatz", "solve_vortex", "MAX_DEGREE"]
