"""Named verification suites run by ``gllab check``.

Each suite returns a :class:`SuiteResult` holding numeric results, the
tolerances applied and one boolean per check.  Results depend only on the
suite arguments and the seed, so serialized reports are reproducible.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .caselab import (BRACKET, allen_cahn_1d, certificate_check, critical_L, inner_variation_1d_check,
                      monotone_1d_check, poincare_check, q_closed, q_quadrature_vs_closed,
                      random_eta_sweep, sine_samples, threshold_function)
from .fileio import clean
from .glcore import GLParams, GLState, apply_gauge, coulomb_residuals
from .grid import GridSpec, integrate
from .innervar import (TestVectorField, bump_eta, closed_inner, identity_checks,
                       inner_outer_link_check, numeric_inner_variations, tangent_sine_eta)
from .obstacle import (coincidence_monotone, default_grid, kkt_report, obstacle_level,
                       solve_obstacle, unconstrained_solution)
from .parallel import ordered_map
from .qforms import (ADMISSIBLE_U, LimitingField, LineMeasurePart, Segment, div_stress_residual,
                     eta_library, hol_residual, iwaniec_lhs)
from .solver import SolveConfig, SolveLog, el_residual, solve_vortex
from .vorticity import loop_from_box, vorticity_mu, winding_number

DEFAULT_SEED = 42


@dataclass
class SuiteResult:
    name: str
    criterion: int
    results: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(self.checks.values())

    def as_dict(self) -> dict:
        return clean({"criterion": self.criterion, "results": self.results,
                      "tolerances": self.tolerances, "checks": self.checks,
                      "pass": self.passed})


def _order(errs, hs) -> list[float]:
    return [math.log(errs[k] / errs[k + 1]) / math.log(hs[k] / hs[k + 1])
            for k in range(len(errs) - 1)]


# -- criterion 1 --------------------------------------------------------------------

def suite_prop41(seed: int = DEFAULT_SEED, n: int = 512, Ls=(0.5, 1.0, 1.5, 2.0)) -> SuiteResult:
    r = SuiteResult("prop41", 1)
    r.tolerances = {"defect": "1e-3*(1+|q_closed|)", "seconds_per_eval": 10.0}
    rows = []
    for L in Ls:
        t0 = time.perf_counter()
        row = q_quadrature_vs_closed(L, n)
        secs = time.perf_counter() - t0
        rows.append({"L": L, "q_closed": row.q_closed, "q_quadrature": row.q_quadrature,
                     "defect": row.defect, "tolerance": row.tolerance})
        r.checks[f"defect_L={L}"] = row.defect <= row.tolerance
        r.checks[f"under_10s_L={L}"] = secs < 10.0
    r.results = {"n": n, "rows": rows}
    r.checks["positive_at_L=1"] = q_closed(1.0) > 0
    r.checks["negative_at_L=2"] = q_closed(2.0) < 0
    return r


# -- criterion 2 --------------------------------------------------------------------

def suite_threshold(seed: int = DEFAULT_SEED, tol: float = 1e-10) -> SuiteResult:
    r = SuiteResult("threshold", 2)
    Ls = critical_L(tol)
    f1, f2 = threshold_function(1.0), threshold_function(2.0)
    lo, hi = threshold_function(Ls - tol), threshold_function(Ls + tol)
    qm, qp = q_closed(Ls - 0.01), q_closed(Ls + 0.01)
    r.results = {"critical_L": Ls, "f(1)": f1, "f(2)": f2, "f(L*-tol)": lo, "f(L*+tol)": hi,
                 "q(L*-0.01)": qm, "q(L*+0.01)": qp, "bracket": list(BRACKET)}
    r.tolerances = {"root": tol, "sign_window": 0.01}
    r.checks = {"bracket_sign_change": f1 > 0 > f2,
                "root_within_tol": lo > 0 > hi,
                "q_sign_change": qm > 0 > qp}
    return r


# -- criterion 3 --------------------------------------------------------------------

def suite_certificate(seed: int = DEFAULT_SEED, n_eta: int = 100, L: float = 0.05,
                      alpha2: float = 4.0, beta2: float = 0.75) -> SuiteResult:
    r = SuiteResult("certificate", 3)
    cert = certificate_check(L, alpha2, beta2)
    qmin = random_eta_sweep(L, n_eta, seed)
    ratio = poincare_check(L, sine_samples(L, np.random.default_rng(seed), 50))
    r.results = {"certificate": {"alpha2": alpha2, "beta2": beta2, "L": L,
                                 "margins": list(cert.margins)},
                 "sweep_min_q": qmin, "n_eta": n_eta, "seed": seed, "poincare_worst_ratio": ratio}
    r.tolerances = {"sweep_min_q": -1e-8, "poincare_ratio": 1.0}
    r.checks = {"margins_positive": cert.ok, "sweep_nonnegative": qmin >= -1e-8,
                "poincare_bound": ratio <= 1.0}
    return r


# -- criterion 4 --------------------------------------------------------------------

def analytic_state(grid: GridSpec) -> GLState:
    """Smooth non-vortex state with slowly varying phase and potential."""
    X, Y = grid.mesh()
    u = (0.85 + 0.1 * np.cos(0.5 * X) * np.sin(0.5 * Y)) * np.exp(0.5j * (X + Y))
    return GLState.from_arrays(grid, u, 0.15 * np.sin(0.5 * Y) + 0.1, 0.1 * np.cos(0.5 * X) + 0.1 * X)


def gauge_function(grid: GridSpec) -> np.ndarray:
    X, Y = grid.mesh()
    return 0.7 * np.sin(1.3 * X) * np.cos(Y) + 0.2 * X * Y


ANALYTIC_PARAMS = GLParams(0.5, 0.3)


def suite_innervar(seed: int = DEFAULT_SEED, n: int = 256, dt: float = 2e-2,
                   link_ns=(64, 128, 256)) -> SuiteResult:
    r = SuiteResult("innervar", 4)
    p = ANALYTIC_PARAMS
    g = GridSpec.square(1.0, n)
    s = analytic_state(g)
    eta = tangent_sine_eta(g)
    c1, c2 = closed_inner(s, p, eta)
    num = numeric_inner_variations(s, p, eta, dt)
    g1, g2 = closed_inner(apply_gauge(s, gauge_function(g)), p, eta)
    rel1 = abs(c1 - num.d1) / abs(num.d1)
    rel2 = abs(c2 - num.d2) / abs(num.d2)
    links, hs = [], []
    for m in link_ns:
        gm = GridSpec.square(1.0, m)
        links.append(inner_outer_link_check(analytic_state(gm), p, tangent_sine_eta(gm))["defect"])
        hs.append(gm.hx)
    orders = _order(links, hs)
    link_tol = 1e-3 * (1 + abs(c2))
    r.results = {"n": n, "d1_numeric": num.d1, "d2_numeric": num.d2, "d1_closed": c1,
                 "d2_closed": c2, "defects": {"d1_relative": rel1, "d2_relative": rel2},
                 "dt": dt, "richardson_order": num.richardson_order,
                 "gauge_drift": {"d1": abs(g1 - c1), "d2": abs(g2 - c2)},
                 "link_defects": dict(zip(map(str, link_ns), links)), "link_orders": orders}
    r.tolerances = {"relative": 1e-4, "gauge": "1e-6*(1+|value|)", "link": link_tol,
                    "link_order_min": 1.5}
    r.checks = {"d1_agrees": rel1 <= 1e-4, "d2_agrees": rel2 <= 1e-4,
                "d1_gauge_invariant": abs(g1 - c1) <= 1e-6 * (1 + abs(c1)),
                "d2_gauge_invariant": abs(g2 - c2) <= 1e-6 * (1 + abs(c2)),
                "link_defect": links[-1] <= link_tol,
                "link_decays_h2": all(o >= 1.5 for o in orders)}
    return r


# -- criterion 5 --------------------------------------------------------------------

def polynomial_eta(grid: GridSpec) -> TestVectorField:
    def func(x, y):
        return x * x * y + 3 * y ** 3 - x, x * y * y - 2 * x ** 3 + y

    def jac(x, y):
        return ((2 * x * y - 1, x * x + 9 * y * y), (y * y - 6 * x * x, 2 * x * y + 1))

    return TestVectorField(grid, func, jac, None, "cubic")


def suite_identities(seed: int = DEFAULT_SEED) -> SuiteResult:
    r = SuiteResult("identities", 5)
    rng = np.random.default_rng(seed)
    g = GridSpec.square(1.0, 128)
    pts = rng.uniform(-1, 1, size=(1000, 2))
    M, N = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    out = identity_checks(polynomial_eta(g), pts, M, N)
    trace_defect = float(np.max(out["trace_identity"]["defect"]))
    de = out["det_expansion"]
    # the trapezoid rule converges faster than any power for smooth compact
    # integrands, but the bump tails need a fine grid to reach 1e-10
    gf = GridSpec.square(1.0, 512)
    bump = bump_eta(gf, (0.1, -0.05), (0.6, 0.7), rng.normal(size=(2, 2, 3)),
                    rng.uniform(-3, 3, size=(2, 2)))
    j11, j12, j21, j22 = bump.node_jacobian()
    int_div = integrate(j11 + j22, gf)
    int_det = integrate(j11 * j22 - j12 * j21, gf)
    r.results = {"trace_identity_max_defect": trace_defect,
                 "det_expansion": {"t": de["t"], "remainder": de["remainder"],
                                   "loglog_slope": de["loglog_slope"],
                                   "cubic_coefficient": de["cubic_coefficient"]},
                 "integral_div_eta": int_div, "integral_det_eta": int_det}
    r.tolerances = {"trace_identity": 1e-12, "cubic_slope": [2.9, 3.1], "integrals": 1e-10}
    r.checks = {"trace_identity": trace_defect <= 1e-12,
                "det_expansion_cubic": 2.9 <= de["loglog_slope"] <= 3.1,
                "integral_div_zero": abs(int_div) <= 1e-10,
                "integral_det_zero": abs(int_det) <= 1e-10}
    return r


# -- criterion 6 --------------------------------------------------------------------

def suite_vortex(seed: int = DEFAULT_SEED, n: int = 128, half_width: float = 4.0,
                 epsilon: float = 0.25, tol_grad: float = 1e-5) -> SuiteResult:
    r = SuiteResult("vortex", 6)
    g = GridSpec.square(half_width, n)
    p = GLParams(epsilon, 0.0)
    log = SolveLog()
    s = solve_vortex(g, p, 1, cfg=SolveConfig(max_iters=5000, tol_grad=tol_grad), log=log)
    res = el_residual(s, p)
    mass = integrate(vorticity_mu(s)) / (2 * math.pi)
    loops = {f"box{b}": winding_number(s.u, loop_from_box(g, -b, b, -b, b)) for b in (1.0, 3.0)}
    E = log.energies
    div_res = coulomb_residuals(s)
    r.results = {"n": n, "half_width": half_width, "epsilon": epsilon, "iterations": len(log.rows),
                 "converged": log.converged, "el_residuals": list(res), "mu_mass_over_2pi": mass,
                 "winding": loops, "energy_final": float(E[-1]), "coulomb": div_res}
    r.tolerances = {"el_residual": 1e-4, "mu_mass_over_2pi": [0.95, 1.05], "coulomb_div": 1e-5}
    r.checks = {"winding_one": all(v == 1 for v in loops.values()),
                "mu_mass": 0.95 <= mass <= 1.05,
                "el_residuals": max(res) <= 1e-4,
                "energy_monotone": bool(np.all(np.diff(E) <= 0)),
                "coulomb_gauge": div_res["div"] <= 1e-5}
    return r


# -- criterion 7 --------------------------------------------------------------------

def suite_obstacle(seed: int = DEFAULT_SEED, n: int = 256, n_sweep: int = 128,
                   tol: float = 1e-10) -> SuiteResult:
    r = SuiteResult("obstacle", 7)
    sol = solve_obstacle(0.2, default_grid(n), tol)
    kkt = kkt_report(sol)
    m = sol.coincidence_mask
    inner = m[1:-1, 1:-1] & m[:-2, 1:-1] & m[2:, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:]
    mu_c = sol.mu_star.values[1:-1, 1:-1][inner]
    mu_dev = float(np.max(np.abs(mu_c - obstacle_level(0.2)))) if mu_c.size else math.inf
    hv = sol.h_star.values
    bounds = bool(np.min(hv) >= sol.obstacle - 1e-10 and np.max(hv) <= 1 + 1e-10)

    gs = default_grid(n_sweep)
    h0 = unconstrained_solution(gs)
    lam_in = 2 * (1 - float(h0.values.min())) + 0.05
    inactive = solve_obstacle(lam_in, gs, tol)
    inactive_err = float(np.max(np.abs(inactive.h_star.values - h0.values)))
    lams = (0.1, 0.2, 0.5, 1.0, 1.9)
    sols = [solve_obstacle(lam, gs, tol) for lam in lams]
    masses = [x.mu_mass() for x in sols]
    r.results = {"n": n, "lambda": 0.2, "iterations": sol.iterations, "kkt": kkt.as_dict(),
                 "coincidence_nodes": int(m.sum()), "mu_on_coincidence_deviation": mu_dev,
                 "inactive_lambda": lam_in, "inactive_max_error": inactive_err,
                 "inactive_mu_mass": inactive.mu_mass(),
                 "sweep_lambdas": list(lams), "coincidence_counts": [int(x.coincidence_mask.sum()) for x in sols],
                 "mu_masses": masses}
    r.tolerances = {"kkt": 1e-9, "inactive": 1e-6, "mu_on_coincidence": 1e-3, "bounds_slack": 1e-10}
    r.checks = {"kkt": kkt.max() <= 1e-9, "inactive_matches_h0": inactive_err <= 1e-6,
                "coincidence_monotone": coincidence_monotone(sols),
                "mu_mass_nonincreasing": all(a >= b - 1e-12 for a, b in zip(masses, masses[1:])),
                "mu_equals_obstacle_on_coincidence": mu_dev <= 1e-3,
                "maximum_principle": bounds}
    return r


# -- criterion 8 --------------------------------------------------------------------

def suite_iwaniec(seed: int = DEFAULT_SEED, n: int = 128) -> SuiteResult:
    r = SuiteResult("iwaniec", 8)
    g = GridSpec.square(1.0, n)
    lib = eta_library(g, seed)
    out = {}
    for name, (func, grad) in ADMISSIBLE_U.items():
        U = LimitingField.from_function(g, func, "nonmagnetic_U", 1.0, grad)
        vals = ordered_map(lambda e, U=U: iwaniec_lhs(U, e), lib)
        lo = min(v.complex_form for v in vals)
        dmax = max(v.defect for v in vals)
        out[name] = {"min_lhs": lo, "max_form_defect": dmax}
        r.checks[f"nonnegative_{name}"] = lo >= -1e-8
        r.checks[f"forms_agree_{name}"] = dmax <= 1e-8
    r.results = {"n": n, "n_eta": len(lib), "seed": seed, "per_U": out}
    r.tolerances = {"lhs": -1e-8, "form_defect": 1e-8}
    return r


# -- criterion 9 --------------------------------------------------------------------

def _exp_abs(x, y):
    return np.exp(-np.abs(x)) + 0.0 * y


def _exp_abs_grad(x, y):
    return np.where(x >= 0, -1.0, 1.0) * np.exp(-np.abs(x)), 0.0 * y


def suite_limiting(seed: int = DEFAULT_SEED, ns=(64, 128, 256)) -> SuiteResult:
    r = SuiteResult("limiting", 9)
    line = LineMeasurePart((Segment((0.0, -1.0), (0.0, 1.0), 2.0),))
    eq, divs, hs, hol_bad, hol_good = [], [], [], [], []
    for n in ns:
        g = GridSpec.square(1.0, n)
        h = LimitingField.from_function(g, _exp_abs, "magnetic_h", 1.0, _exp_abs_grad)
        hx, hy = h.grad()
        eq.append(float(np.max(np.abs(hx * hx + hy * hy - h.values.values ** 2))))
        divs.append(div_stress_residual(h, line))
        hs.append(g.hx)
        bad = LimitingField.from_function(g, lambda x, y: x * x + y * y, "nonmagnetic_U")
        good = LimitingField.from_function(g, lambda x, y: x * x - y * y, "nonmagnetic_U")
        hol_bad.append(hol_residual(bad))
        hol_good.append(hol_residual(good))
    orders = _order(divs, hs)
    consts = [d / (hh * hh) for d, hh in zip(divs, hs)]
    r.results = {"ns": list(ns), "equipartition_max": eq, "div_stress": divs, "div_orders": orders,
                 "div_over_h2": consts, "hol_residual_x2+y2": hol_bad, "hol_residual_x2-y2": hol_good}
    r.tolerances = {"equipartition": 0.0, "div_order_min": 1.8, "negative_control_floor": 1.0,
                    "positive_control": 1e-9}
    r.checks = {"equipartition_exact": max(eq) == 0.0,
                "div_stress_h2": all(o >= 1.8 for o in orders),
                "negative_control": min(hol_bad) >= 1.0,
                "positive_control": max(hol_good) <= 1e-9}
    return r


# -- criterion 10 -------------------------------------------------------------------

def suite_monotone1d(seed: int = DEFAULT_SEED) -> SuiteResult:
    r = SuiteResult("monotone1d", 10)
    V, _, _, fp, fpp = allen_cahn_1d()
    m = monotone_1d_check(fp, fpp, V, -8.0, 8.0)
    iv = inner_variation_1d_check()
    r.results = {"min_eigenvalue": m.min_eigenvalue, "dense_check": m.dense_check,
                 "el_residual": m.el_residual, "n": m.n,
                 "inner_second_numeric": iv.numeric, "inner_second_closed": iv.closed,
                 "defect": iv.defect, "half_coefficient_value": iv.half_form,
                 "half_coefficient_defect": iv.half_defect}
    r.tolerances = {"min_eigenvalue": -1e-6, "inner_identity": 1e-5}
    r.checks = {"eigenvalue_nonnegative": m.min_eigenvalue >= -1e-6,
                "inner_identity": iv.defect <= 1e-5}
    return r


# -- criterion 11 -------------------------------------------------------------------

def suite_determinism(seed: int = DEFAULT_SEED) -> SuiteResult:
    r = SuiteResult("determinism", 11)
    names = ("identities", "threshold", "certificate")
    first = [json.dumps(SUITES[k][1](seed).as_dict(), sort_keys=True) for k in names]
    second = [json.dumps(SUITES[k][1](seed).as_dict(), sort_keys=True) for k in names]
    r.results = {"suites": list(names), "seed": seed}
    r.checks = {f"repeat_{k}": a == b for k, a, b in zip(names, first, second)}
    return r


SUITES = {
    "prop41": (1, suite_prop41),
    "threshold": (2, suite_threshold),
    "certificate": (3, suite_certificate),
    "innervar": (4, suite_innervar),
    "identities": (5, suite_identities),
    "vortex": (6, suite_vortex),
    "obstacle": (7, suite_obstacle),
    "iwaniec": (8, suite_iwaniec),
    "limiting": (9, suite_limiting),
    "monotone1d": (10, suite_monotone1d),
    "determinism": (11, suite_determinism),
}


def run_suite(name: str, seed: int = DEFAULT_SEED, **kwargs) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name][1](seed, **kwargs)
