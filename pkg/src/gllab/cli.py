"""``gllab`` command line: simulations, form evaluations and verification suites.

Every command writes a JSON report ``{command, inputs, inputs_digest, results,
tolerances, checks, pass, timestamp}``.  Exit status is 0 when every check
passes, 1 on a numerical failure and 2 on bad configuration.
"""
from __future__ import annotations

import csv
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, backend
from .caselab import certificate_check, critical_L, q_quadrature_vs_closed
from .fileio import digest, dump_report, read_measure, read_state, write_state
from .glcore import GLParams, gl_energy
from .grid import GridSpec, ScalarField, integrate, read_field, write_field
from .innervar import closed_inner, numeric_inner_variations, random_bump_eta, tangent_sine_eta
from .obstacle import ObstacleNotConverged, default_grid, kkt_report, solve_obstacle
from .parallel import thread_count
from .qforms import KINDS, LimitingField, q_h, q_u
from .solver import SolveConfig, SolveLog, StepUnderflow, el_residual, solve_vortex
from .suites import DEFAULT_SEED, SUITES, analytic_state, run_suite
from .vorticity import check_resolution, loop_from_box, vorticity_mu, winding_number

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2
NUMERIC_ERRORS = (StepUnderflow, ObstacleNotConverged, FloatingPointError, np.linalg.LinAlgError)


class ConfigError(click.ClickException):
    exit_code = EXIT_CONFIG


def _threads() -> int:
    try:
        return thread_count()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _finish(command: str, inputs: dict, files, results: dict, tolerances: dict, checks: dict,
            report_path: Path, error: str | None = None) -> int:
    ok = error is None and all(bool(v) for v in checks.values())
    report = {"command": command, "inputs": inputs, "inputs_digest": digest(inputs, files),
              "results": results, "tolerances": tolerances,
              "checks": {k: bool(v) for k, v in checks.items()}, "pass": ok,
              "backend": backend.BACKEND, "threads": _threads()}
    if error is not None:
        report["error"] = error
    report_path.parent.mkdir(parents=True, exist_ok=True)
    dump_report(report_path, report)
    for k, v in checks.items():
        click.echo(f"{'PASS' if v else 'FAIL'}  {k}")
    if error is not None:
        click.echo(f"error: {error}", err=True)
    click.echo(f"report: {report_path}")
    return EXIT_OK if ok else EXIT_NUMERIC


def _run(command, inputs, files, out_report, body) -> None:
    """Run ``body() -> (results, tolerances, checks)`` and exit with the report status."""
    _threads()
    try:
        results, tolerances, checks = body()
        code = _finish(command, inputs, files, results, tolerances, checks, out_report)
    except NUMERIC_ERRORS as exc:
        code = _finish(command, inputs, files, {}, {}, {}, out_report, f"{type(exc).__name__}: {exc}")
    except (ValueError, KeyError, OSError) as exc:
        raise ConfigError(str(exc)) from None
    sys.exit(code)


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="gllab")
def main() -> None:
    """Ginzburg-Landau stability laboratory."""


@main.command()
@click.option("--n", type=click.IntRange(8), default=128, show_default=True, help="cells per side")
@click.option("--half-width", type=float, default=4.0, show_default=True)
@click.option("--epsilon", type=float, default=0.25, show_default=True)
@click.option("--h-ex", type=float, default=0.0, show_default=True)
@click.option("--degree", type=int, default=1, show_default=True)
@click.option("--center", type=(float, float), default=(0.0, 0.0), show_default=True)
@click.option("--max-iters", type=click.IntRange(1), default=5000, show_default=True)
@click.option("--tol-grad", type=float, default=1e-5, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="gllab_simulate", show_default=True)
def simulate(n, half_width, epsilon, h_ex, degree, center, max_iters, tol_grad, seed, out):
    """Relax a degree-d vortex ansatz by gradient descent."""
    inputs = {"n": n, "half_width": half_width, "epsilon": epsilon, "h_ex": h_ex, "degree": degree,
              "center": list(center), "max_iters": max_iters, "tol_grad": tol_grad, "seed": seed}
    d = _out_dir(out)

    def body():
        g = GridSpec.square(half_width, n)
        p = GLParams(epsilon, h_ex)
        check_resolution(g, epsilon)
        log = SolveLog()
        s = solve_vortex(g, p, degree, tuple(center), SolveConfig(max_iters=max_iters, tol_grad=tol_grad), log)
        log.write_csv(d / "iterations.csv")
        write_state(d, s, p)
        res = el_residual(s, p)
        E = log.energies
        results = {"iterations": len(log.rows), "reason": log.reason, "energy": gl_energy(s, p),
                   "el_residuals": list(res), "mu_mass_over_2pi": integrate(vorticity_mu(s)) / (2 * math.pi),
                   "state": "state.json", "log": "iterations.csv"}
        checks = {"converged": log.converged, "energy_monotone": bool(np.all(np.diff(E) <= 0))}
        return results, {"tol_grad": tol_grad}, checks

    _run("simulate", inputs, [], d / "report.json", body)


@main.command()
@click.option("--state", "state_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="state manifest JSON")
@click.option("--box", "boxes", type=(float, float, float, float), multiple=True,
              help="winding loop x0 x1 y0 y1; repeatable")
@click.option("--out", type=click.Path(file_okay=False), default="gllab_vorticity", show_default=True)
def vorticity(state_path, boxes, out):
    """Vorticity field and winding numbers of a stored state."""
    inputs = {"state": Path(state_path).name, "boxes": [list(b) for b in boxes]}
    d = _out_dir(out)

    def body():
        s, _ = read_state(state_path)
        mu = vorticity_mu(s)
        write_field(d / "mu.csv", mu)
        windings = [winding_number(s.u, loop_from_box(s.grid, *b)) for b in boxes]
        results = {"mu_mass_over_2pi": integrate(mu) / (2 * math.pi), "windings": windings,
                   "mu": "mu.csv"}
        return results, {}, {}

    _run("vorticity", inputs, [state_path], d / "report.json", body)


@main.command()
@click.option("--state", "state_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="state manifest JSON; default is the built-in analytic state")
@click.option("--n", type=click.IntRange(8), default=128, show_default=True)
@click.option("--epsilon", type=float, default=None, help="overrides the manifest value")
@click.option("--h-ex", type=float, default=None, help="overrides the manifest value")
@click.option("--eta", "eta_kind", type=click.Choice(["tangent", "bump"]), default="tangent",
              show_default=True)
@click.option("--dt", type=float, default=2e-2, show_default=True)
@click.option("--rtol", type=float, default=1e-4, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="gllab_innervar", show_default=True)
def innervar(state_path, n, epsilon, h_ex, eta_kind, dt, rtol, seed, out):
    """Closed-form versus flow finite-difference inner variations."""
    inputs = {"state": Path(state_path).name if state_path else None, "n": n, "epsilon": epsilon,
              "h_ex": h_ex, "eta": eta_kind, "dt": dt, "rtol": rtol, "seed": seed}
    d = _out_dir(out)

    def body():
        if state_path:
            s, p0 = read_state(state_path)
        else:
            s, p0 = analytic_state(GridSpec.square(1.0, n)), GLParams(0.5, 0.3)
        eps = epsilon if epsilon is not None else (p0.epsilon if p0 else None)
        if eps is None:
            raise ValueError("--epsilon is required when the manifest has no params")
        p = GLParams(eps, h_ex if h_ex is not None else (p0.h_ex if p0 else 0.0))
        if eta_kind == "tangent":
            eta = tangent_sine_eta(s.grid)
        else:
            eta = random_bump_eta(s.grid, np.random.default_rng(seed))
        c1, c2 = closed_inner(s, p, eta)
        r = numeric_inner_variations(s, p, eta, dt)
        rel = {"d1": abs(c1 - r.d1) / max(abs(r.d1), 1e-300),
               "d2": abs(c2 - r.d2) / max(abs(r.d2), 1e-300)}
        results = {"d1_numeric": r.d1, "d2_numeric": r.d2, "d1_closed": c1, "d2_closed": c2,
                   "defects": rel, "dt": dt, "richardson_order": list(r.richardson_order)}
        checks = {"d1_agrees": rel["d1"] <= rtol, "d2_agrees": rel["d2"] <= rtol}
        return results, {"relative": rtol}, checks

    _run("innervar", inputs, [state_path] if state_path else [], d / "report.json", body)


@main.command()
@click.option("--field", "field_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="scalar field file")
@click.option("--kind", type=click.Choice(KINDS), default="magnetic_h", show_default=True)
@click.option("--lam", type=float, default=1.0, show_default=True)
@click.option("--measure", "measure_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--n-eta", type=click.IntRange(1), default=20, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="gllab_qform", show_default=True)
def qform(field_path, kind, lam, measure_path, n_eta, seed, out):
    """Limiting quadratic form over seeded random test fields."""
    inputs = {"field": Path(field_path).name, "kind": kind, "lam": lam,
              "measure": Path(measure_path).name if measure_path else None, "n_eta": n_eta, "seed": seed}
    files = [field_path] + ([measure_path] if measure_path else [])
    d = _out_dir(out)

    def body():
        fld = read_field(field_path)
        if not isinstance(fld, ScalarField) or fld.is_complex:
            raise ValueError("--field must be a real scalar field file")
        lf = LimitingField(fld, kind, lam)
        mu = read_measure(measure_path) if measure_path else None
        if mu is not None and mu.line_part is not None and not mu.line_part.inside(fld.grid):
            raise ValueError("measure segments leave the field grid")
        rng = np.random.default_rng(seed)
        form = q_h if kind == "magnetic_h" else q_u
        values = [form(lf, mu, random_bump_eta(fld.grid, rng)) for _ in range(n_eta)]
        return {"values": values, "min": min(values)}, {}, {}

    _run("qform", inputs, files, d / "report.json", body)


@main.command()
@click.option("--L", "Ls", type=float, multiple=True, default=(0.5, 1.0, 1.5, 2.0), show_default=True)
@click.option("--n", type=click.IntRange(8), default=512, show_default=True)
@click.option("--alpha2", type=float, default=4.0, show_default=True)
@click.option("--beta2", type=float, default=0.75, show_default=True)
@click.option("--cert-L", "cert_L", type=float, default=0.05, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="gllab_prop41", show_default=True)
def prop41(Ls, n, alpha2, beta2, cert_L, out):
    """Quadrature versus closed form on the line-vorticity example."""
    inputs = {"L": list(Ls), "n": n, "alpha2": alpha2, "beta2": beta2, "cert_L": cert_L}
    d = _out_dir(out)

    def body():
        rows = [q_quadrature_vs_closed(L, n) for L in Ls]
        with open(d / "prop41.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["L", "q_closed", "q_quadrature", "defect"])
            for r in rows:
                w.writerow([repr(r.L), repr(r.q_closed), repr(r.q_quadrature), repr(r.defect)])
        cert = certificate_check(cert_L, alpha2, beta2)
        summary = {"critical_L": critical_L(),
                   "certificate": {"alpha2": alpha2, "beta2": beta2, "L": cert_L,
                                   "margins": list(cert.margins)}}
        results = dict(summary, rows=[{"L": r.L, "q_closed": r.q_closed, "q_quadrature": r.q_quadrature,
                                       "defect": r.defect} for r in rows], table="prop41.csv")
        checks = {f"defect_L={r.L}": r.defect <= r.tolerance for r in rows}
        checks["certificate"] = cert.ok
        return results, {"defect": "1e-3*(1+|q_closed|)"}, checks

    _run("prop41", inputs, [], d / "report.json", body)


@main.command()
@click.option("--lambda", "lam", type=float, required=True)
@click.option("--n", type=click.IntRange(4), default=256, show_default=True)
@click.option("--tol", type=float, default=1e-10, show_default=True)
@click.option("--max-iters", type=click.IntRange(1), default=200000, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="gllab_obstacle", show_default=True)
def obstacle(lam, n, tol, max_iters, out):
    """Solve the obstacle problem on (-1, 1)^2 by projected SOR."""
    inputs = {"lambda": lam, "n": n, "tol": tol, "max_iters": max_iters}
    d = _out_dir(out)

    def body():
        sol = solve_obstacle(lam, default_grid(n), tol, max_iters)
        write_field(d / "h_star.csv", sol.h_star)
        write_field(d / "mu_star.csv", sol.mu_star)
        kkt = kkt_report(sol)
        results = {"kkt": kkt.as_dict(), "iterations": sol.iterations, "residual": sol.residual,
                   "omega": sol.omega, "coincidence_nodes": int(sol.coincidence_mask.sum()),
                   "mu_mass": sol.mu_mass(), "obstacle": sol.obstacle,
                   "h_star": "h_star.csv", "mu_star": "mu_star.csv"}
        checks = {k: v <= 10 * tol for k, v in kkt.as_dict().items()}
        return results, {"kkt": 10 * tol}, checks

    _run("obstacle", inputs, [], d / "kkt.json", body)


@main.command()
@click.option("--suite", "suites", type=click.Choice(sorted(SUITES)), multiple=True)
@click.option("--all", "run_all", is_flag=True, help="run every suite")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default="gllab_check.json",
              show_default=True)
def check(suites, run_all, seed, report_path):
    """Run named verification suites."""
    if run_all:
        names = sorted(SUITES, key=lambda k: SUITES[k][0])
    elif suites:
        names = list(dict.fromkeys(suites))
    else:
        raise ConfigError("give --suite NAME or --all")
    inputs = {"suites": names, "seed": seed}

    def body():
        results, tolerances, checks = {}, {}, {}
        for name in names:
            r = run_suite(name, seed)
            body_ = r.as_dict()
            results[name] = body_["results"]
            tolerances[name] = body_["tolerances"]
            for k, v in r.checks.items():
                checks[f"{name}.{k}"] = v
            click.echo(f"[{r.criterion:2d}] {name:12s} {'PASS' if r.passed else 'FAIL'}")
        return results, tolerances, checks

    _run("check", inputs, [], Path(report_path), body)


if __name__ == "__main__":
    main()
