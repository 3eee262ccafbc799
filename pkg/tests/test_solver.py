import csv

import numpy as np
import pytest

from gllab.glcore import GLParams, GLState, coulomb_residuals
from gllab.grid import GridSpec
from gllab.solver import (SolveConfig, SolveLog, StepUnderflow, el_residual, minimize_gl,
                          solve_vortex, vortex_ansatz)
from gllab.vorticity import loop_from_box, winding_number


@pytest.fixture(scope="module")
def unit_vortex():
    g = GridSpec.square(1.0, 48)
    p = GLParams(0.5, 0.0)
    log = SolveLog()
    s = solve_vortex(g, p, 1, cfg=SolveConfig(max_iters=3000, tol_grad=1e-5), log=log)
    return g, p, s, log


@pytest.mark.parametrize("kw", [{"max_iters": -1}, {"step0": 0.0}, {"tol_grad": -1.0},
                                {"armijo_c": 1.0}, {"armijo_c": 0.0}, {"gauge_every": 0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SolveConfig(**kw)


def test_el_residual_trivial_states():
    g = GridSpec.square(1.0, 16)
    p = GLParams(0.3, 0.0)
    assert el_residual(GLState.from_arrays(g, np.ones(g.shape), 0, 0), p) == (0.0, 0.0, 0.0)
    assert el_residual(GLState.from_arrays(g, np.zeros(g.shape), 0, 0), p) == (0.0, 0.0, 0.0)


def test_superconducting_state_is_fixed_point():
    g = GridSpec.square(1.0, 16)
    s0 = GLState.from_arrays(g, np.ones(g.shape), 0, 0)
    log = SolveLog()
    s = minimize_gl(s0, GLParams(0.3, 0.0), SolveConfig(), log)
    assert log.converged and len(log.rows) == 1
    assert np.array_equal(s.u.values, s0.u.values) and np.all(s.A.x == 0) and np.all(s.A.y == 0)


def test_vortex_ansatz_guards_and_symmetry():
    g = GridSpec.square(1.0, 32)
    with pytest.raises(ValueError):
        vortex_ansatz(g, (0, 0), 9, 0.3)
    with pytest.raises(ValueError):
        vortex_ansatz(g, (1.0, 0), 1, 0.3)
    X, Y = g.mesh()
    u0 = vortex_ansatz(g, (0, 0), 0, 0.3).values
    assert np.allclose(u0, np.tanh(np.hypot(X, Y) / 0.3), atol=1e-15)
    u1 = vortex_ansatz(g, (0, 0), 1, 0.3).values
    assert np.allclose(u1[::-1, ::-1], -u1, atol=1e-12)
    assert winding_number(u1, loop_from_box(g, -0.3, 0.3, -0.3, 0.3)) == 1


def test_vortex_relaxation(unit_vortex, tmp_path):
    g, p, s, log = unit_vortex
    assert log.converged
    E = log.energies
    assert np.all(np.diff(E) <= 0)
    assert winding_number(s.u, loop_from_box(g, -0.5, 0.5, -0.5, 0.5)) == 1
    assert coulomb_residuals(s)["div"] <= 1e-5
    assert max(el_residual(s, p)) <= 1e-4
    log.write_csv(tmp_path / "log.csv")
    rows = list(csv.reader((tmp_path / "log.csv").open()))
    assert rows[0] == ["iter", "energy", "grad_norm", "step"]
    assert len(rows) == len(log.rows) + 1


def test_residual_decreases_with_tolerance():
    g = GridSpec.square(1.0, 32)
    p = GLParams(0.5, 0.0)
    loose = solve_vortex(g, p, 1, cfg=SolveConfig(tol_grad=1e-2))
    tight = solve_vortex(g, p, 1, cfg=SolveConfig(tol_grad=1e-5))
    assert max(el_residual(tight, p)) < max(el_residual(loose, p))


def test_max_iters_reported():
    g = GridSpec.square(1.0, 32)
    log = SolveLog()
    solve_vortex(g, GLParams(0.5, 0.0), 1, cfg=SolveConfig(max_iters=3), log=log)
    assert not log.converged and log.reason == "max_iters" and len(log.rows) == 4


def test_step_underflow_is_raised(monkeypatch):
    import gllab.solver as solver

    g = GridSpec.square(1.0, 16)
    s0 = GLState.from_arrays(g, vortex_ansatz(g, (0, 0), 1, 0.5).values, 0, 0)
    # an energy that never decreases forces backtracking below the floor
    calls = {"n": 0}
    real = solver.gl_energy

    def stubborn(s, p):
        calls["n"] += 1
        return real(s, p) if calls["n"] == 1 else np.inf

    monkeypatch.setattr(solver, "gl_energy", stubborn)
    with pytest.raises(StepUnderflow):
        minimize_gl(s0, GLParams(0.5, 0.0))
