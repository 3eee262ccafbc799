"""Mean-field obstacle problem: ``h >= 1 - lambda/2``, ``-Lap h + h >= 0``, complementarity.

The operator is the 5-point ``A h = -Lap_h h + h`` on interior nodes with
``h = 1`` on the boundary, and the solver is lexicographic projected SOR.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import backend as _backend
from .grid import GridSpec, ScalarField

OMEGA_MAX = 1.9
CHECK_EVERY = 10
COINCIDENCE_TOL = 1e-9


class ObstacleNotConverged(RuntimeError):
    pass


def obstacle_level(lam: float) -> float:
    return 1.0 - lam / 2.0


def default_grid(n: int) -> GridSpec:
    return GridSpec.square(1.0, n)


def _check_uniform(grid: GridSpec) -> float:
    if not math.isclose(grid.hx, grid.hy, rel_tol=1e-12):
        raise ValueError("the obstacle solver needs hx == hy")
    return grid.hx


def apply_operator(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``-Lap_h f + f`` at interior nodes, zero on the boundary."""
    h = _check_uniform(grid)
    out = np.zeros_like(f, dtype=float)
    c = f[1:-1, 1:-1]
    lap = (f[:-2, 1:-1] + f[2:, 1:-1] + f[1:-1, :-2] + f[1:-1, 2:] - 4 * c) / (h * h)
    out[1:-1, 1:-1] = -lap + c
    return out


def optimal_omega(grid: GridSpec) -> float:
    h = _check_uniform(grid)
    rho = (2 * math.cos(math.pi / grid.nx) + 2 * math.cos(math.pi / grid.ny)) / (4 + h * h)
    return 2.0 / (1.0 + math.sqrt(1.0 - rho * rho))


def projected_residual(hv: np.ndarray, mu: np.ndarray, psi: float) -> float:
    r = np.minimum(hv - psi, mu)[1:-1, 1:-1]
    return float(np.max(np.abs(r)))


@dataclass(frozen=True, eq=False)
class ObstacleSolution:
    h_star: ScalarField
    mu_star: ScalarField
    coincidence_mask: np.ndarray
    lam: float
    iterations: int
    residual: float
    omega: float
    backend: str

    @property
    def obstacle(self) -> float:
        return obstacle_level(self.lam)

    @property
    def grid(self) -> GridSpec:
        return self.h_star.grid

    def mu_mass(self) -> float:
        """Total mass with each interior node carrying the cell area h^2."""
        g = self.grid
        return float(np.sum(self.mu_star.values) * g.hx * g.hy)


def solve_obstacle(lam: float, grid: GridSpec, tol: float = 1e-10, max_iters: int = 200000,
                   omega: float | None = None, backend: str | None = None,
                   h0: np.ndarray | None = None) -> ObstacleSolution:
    """Projected SOR until ``max |min(h - psi, A h)| <= tol`` on interior nodes."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")
    hsp = _check_uniform(grid)
    psi = obstacle_level(lam)
    if omega is None:
        omega = min(OMEGA_MAX, optimal_omega(grid))
    if not 1.0 <= omega <= OMEGA_MAX:
        raise ValueError(f"omega must lie in [1, {OMEGA_MAX}]")
    hv = np.ones(grid.shape) if h0 is None else np.array(h0, dtype=float, order="C")
    hv[grid.boundary_mask] = 1.0
    np.maximum(hv, psi, out=hv)
    denom = 4.0 + hsp * hsp
    name = _backend.BACKEND if backend is None else backend
    it = 0
    res = projected_residual(hv, apply_operator(hv, grid), psi)
    while res > tol:
        if it >= max_iters:
            raise ObstacleNotConverged(
                f"PSOR stopped after {it} sweeps with projected residual {res:.3e} > {tol:.1e}")
        _backend.psor_sweeps(hv, psi, omega, denom, CHECK_EVERY, name)
        it += CHECK_EVERY
        res = projected_residual(hv, apply_operator(hv, grid), psi)
    mu = apply_operator(hv, grid)
    mask = np.zeros(grid.shape, dtype=bool)
    mask[1:-1, 1:-1] = (hv - psi)[1:-1, 1:-1] <= COINCIDENCE_TOL
    return ObstacleSolution(ScalarField(grid, hv), ScalarField(grid, mu), mask, lam, it, res,
                            omega, name)


def unconstrained_solution(grid: GridSpec) -> ScalarField:
    """``A h0 = 0`` inside with ``h0 = 1`` on the boundary, by a sparse direct solve."""
    hsp = _check_uniform(grid)
    nx, ny = grid.nx - 1, grid.ny - 1

    def lap1(m):
        return sp.diags([-np.ones(m - 1), 2 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1])

    K = (sp.kron(lap1(nx), sp.identity(ny)) + sp.kron(sp.identity(nx), lap1(ny))) / hsp ** 2
    K = (K + sp.identity(nx * ny)).tocsc()
    rhs = np.zeros((nx, ny))
    c = 1.0 / hsp ** 2
    rhs[0, :] += c
    rhs[-1, :] += c
    rhs[:, 0] += c
    rhs[:, -1] += c
    inner = spla.spsolve(K, rhs.ravel()).reshape(nx, ny)
    out = np.ones(grid.shape)
    out[1:-1, 1:-1] = inner
    return ScalarField(grid, out)


@dataclass(frozen=True)
class KKTReport:
    feasibility: float
    dual_feasibility: float
    complementarity: float

    def as_dict(self) -> dict:
        return {"feasibility": self.feasibility, "dual_feasibility": self.dual_feasibility,
                "complementarity": self.complementarity}

    def max(self) -> float:
        return max(self.feasibility, self.dual_feasibility, self.complementarity)


def kkt_residuals(hv: np.ndarray, grid: GridSpec, lam: float) -> KKTReport:
    psi = obstacle_level(lam)
    mu = apply_operator(hv, grid)[1:-1, 1:-1]
    gap = (hv - psi)[1:-1, 1:-1]
    return KKTReport(float(max(0.0, -np.min(gap))), float(max(0.0, -np.min(mu))),
                     float(np.max(np.abs(gap * mu))))


def kkt_report(sol: ObstacleSolution) -> KKTReport:
    return kkt_residuals(sol.h_star.values, sol.grid, sol.lam)


def e_lambda(f: ScalarField, lam: float) -> float:
    """Discrete ``(1/2 lam) int |A f| + 1/2 int (|grad f|^2 + |f - 1|^2)``.

    Interior nodes carry the cell area ``h^2`` and the gradient term is the
    edge sum, so the quadratic part is the energy whose gradient is ``A``.
    """
    g = f.grid
    hsp = _check_uniform(g)
    v = f.values
    if np.max(np.abs(v[g.boundary_mask] - 1.0)) > 1e-12:
        raise ValueError("e_lambda needs f = 1 on the boundary")
    area = hsp * hsp
    mu = apply_operator(v, g)[1:-1, 1:-1]
    grad2 = float(np.sum(np.diff(v, axis=0) ** 2) + np.sum(np.diff(v, axis=1) ** 2))
    pot = float(np.sum((v[1:-1, 1:-1] - 1.0) ** 2) * area)
    return float(np.sum(np.abs(mu)) * area / (2 * lam) + 0.5 * grad2 + 0.5 * pot)


def coincidence_monotone(sols) -> bool:
    """Masks shrink (nodewise inclusion) as lambda increases."""
    ordered = sorted(sols, key=lambda s: s.lam)
    return all(np.all(b.coincidence_mask <= a.coincidence_mask)
               for a, b in zip(ordered, ordered[1:]))


__all__ = ["ObstacleSolution", "ObstacleNotConverged", "KKTReport", "solve_obstacle",
           "kkt_report", "kkt_residuals", "e_lambda", "apply_operator", "obstacle_level",
           "unconstrained_solution", "optimal_omega", "coincidence_monotone", "default_grid"]
