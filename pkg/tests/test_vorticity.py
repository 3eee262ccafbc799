import math

import numpy as np
import pytest

from gllab.glcore import GLParams, GLState, apply_gauge
from gllab.grid import GridSpec, integrate
from gllab.solver import SolveConfig, solve_vortex, vortex_ansatz
from gllab.vorticity import (check_resolution, loop_from_box, max_phase_jump, supercurrent,
                             vorticity_mu, winding_number)

G = GridSpec.square(1.0, 64)
X, Y = G.mesh()


def test_supercurrent_examples():
    j = supercurrent(GLState.from_arrays(G, np.ones(G.shape), 0, 0))
    assert np.all(j.x == 0) and np.all(j.y == 0)
    j = supercurrent(GLState.from_arrays(G, np.ones(G.shape), 0.4, -0.3))
    assert np.max(np.abs(j.x + 0.4)) < 1e-4 and np.max(np.abs(j.y - 0.3)) < 1e-4
    j = supercurrent(GLState.from_arrays(G, np.exp(1j * X), 0, 0))
    assert np.max(np.abs(j.x - 1)) < 1e-3 and np.max(np.abs(j.y)) < 1e-12


def test_vorticity_trivial_and_gauge():
    s = GLState.from_arrays(G, np.ones(G.shape), 0, 0)
    assert np.all(vorticity_mu(s).values == 0)
    diffs = []
    for n in (32, 64):
        g = GridSpec.square(1.0, n)
        Xg, Yg = g.mesh()
        ug = (0.8 + 0.1 * np.cos(Xg * Yg)) * np.exp(1j * (Xg - 0.5 * Yg * Yg))
        sg = GLState.from_arrays(g, ug, 0.3 * np.sin(Yg), 0.2 * Xg * Xg)
        fg = np.sin(1.7 * Xg) * np.cos(Yg) + Xg * Yg
        diffs.append(np.max(np.abs(vorticity_mu(apply_gauge(sg, fg)).values - vorticity_mu(sg).values)))
    assert diffs[1] < 1e-2 and diffs[0] / diffs[1] > 3


def test_winding_examples():
    loop = loop_from_box(G, -0.5, 0.5, -0.5, 0.5)
    assert winding_number(np.ones(G.shape, complex), loop) == 0
    assert winding_number(vortex_ansatz(G, (0.1, -0.1), 1, 0.2), loop) == 1
    assert winding_number(vortex_ansatz(G, (0, 0), -2, 0.2), loop) == -2
    assert winding_number(vortex_ansatz(G, (0.7, 0.7), 1, 0.2), loop) == 0


def test_winding_invariant_under_enlargement():
    u = vortex_ansatz(G, (0.05, 0.0), 3, 0.2)
    vals = {winding_number(u, loop_from_box(G, -b, b, -b, b)) for b in (0.3, 0.5, 0.8, 1.0)}
    assert vals == {3}
    assert max_phase_jump(u, loop_from_box(G, -0.3, 0.3, -0.3, 0.3)) < math.pi


def test_winding_errors():
    u = vortex_ansatz(G, (0, 0), 1, 0.2).values.copy()
    loop = loop_from_box(G, -0.5, 0.5, -0.5, 0.5)
    u[loop[0], loop[2] + 3] = 0
    with pytest.raises(ValueError, match="vortex core"):
        winding_number(u, loop)
    with pytest.raises(ValueError):
        winding_number(u, (5, 5, 0, 10))


def test_resolution_warning():
    with pytest.warns(RuntimeWarning):
        assert not check_resolution(G, 0.05)
    assert check_resolution(G, 0.2)


def test_quantization_small_case():
    g = GridSpec.square(2.0, 64)
    s = solve_vortex(g, GLParams(0.25, 0.0), 1, cfg=SolveConfig(tol_grad=1e-4))
    assert abs(integrate(vorticity_mu(s)) / (2 * math.pi) - 1) <= 0.05
