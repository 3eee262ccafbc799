import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from gllab.cli import main
from gllab.fileio import write_measure
from gllab.grid import GridSpec, ScalarField, write_field


@pytest.fixture
def run(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("GLLAB_THREADS", raising=False)
    runner = CliRunner()

    def _run(*args, env=None):
        return runner.invoke(main, [str(a) for a in args], env=env, catch_exceptions=False)

    return _run


def test_version(run):
    r = run("--version")
    assert r.exit_code == 0 and "0.1.0" in r.output


def test_check_identities(run, tmp_path):
    r = run("check", "--suite", "identities", "--report", "c.json")
    assert r.exit_code == 0, r.output
    rep = json.loads((tmp_path / "c.json").read_text())
    assert rep["pass"] is True and rep["command"] == "check"
    assert "PASS" in r.output


def test_check_needs_a_suite(run):
    assert run("check").exit_code == 2
    assert run("check", "--suite", "nope").exit_code == 2


def test_bad_thread_setting_is_a_config_error(run):
    r = run("check", "--suite", "threshold", env={"GLLAB_THREADS": "zero"})
    assert r.exit_code == 2


def test_obstacle_writes_outputs(run, tmp_path):
    r = run("obstacle", "--lambda", 0.2, "--n", 32, "--out", "ob")
    assert r.exit_code == 0, r.output
    rep = json.loads((tmp_path / "ob" / "kkt.json").read_text())
    assert rep["pass"] and max(rep["results"]["kkt"].values()) <= 1e-9
    assert (tmp_path / "ob" / "h_star.csv").exists() and (tmp_path / "ob" / "mu_star.csv").exists()


def test_obstacle_failures(run, tmp_path):
    assert run("obstacle", "--lambda", -1, "--n", 16).exit_code == 2
    r = run("obstacle", "--lambda", 0.2, "--n", 64, "--max-iters", 1, "--out", "bad")
    assert r.exit_code == 1
    rep = json.loads((tmp_path / "bad" / "kkt.json").read_text())
    assert rep["pass"] is False and rep["error"].startswith("ObstacleNotConverged")


def test_prop41_table(run, tmp_path):
    r = run("prop41", "--L", 1.0, "--L", 2.0, "--n", 128, "--out", "p")
    assert r.exit_code == 0, r.output
    with open(tmp_path / "p" / "prop41.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(x["L"]) for x in rows] == [1.0, 2.0]
    assert float(rows[0]["q_closed"]) > 0 > float(rows[1]["q_closed"])
    rep = json.loads((tmp_path / "p" / "report.json").read_text())
    assert abs(rep["results"]["critical_L"] - 1.3999107451745658) < 1e-9


def test_simulate_then_vorticity(run, tmp_path):
    r = run("simulate", "--n", 32, "--half-width", 2, "--epsilon", 0.5, "--tol-grad", 1e-4,
            "--out", "sim")
    assert r.exit_code == 0, r.output
    rep = json.loads((tmp_path / "sim" / "report.json").read_text())
    assert rep["checks"]["converged"] and rep["checks"]["energy_monotone"]
    r = run("vorticity", "--state", "sim/state.json", "--box", -1, 1, -1, 1, "--out", "vor")
    assert r.exit_code == 0, r.output
    rep = json.loads((tmp_path / "vor" / "report.json").read_text())
    assert rep["results"]["windings"] == [1]


def test_innervar_default_state(run, tmp_path):
    r = run("innervar", "--n", 128, "--rtol", 5e-4, "--out", "iv")
    assert r.exit_code == 0, r.output
    rep = json.loads((tmp_path / "iv" / "report.json").read_text())
    assert rep["results"]["defects"]["d2"] <= 5e-4


def test_qform_with_measure(run, tmp_path):
    g = GridSpec.square(1.0, 32)
    X, _ = g.mesh()
    write_field(tmp_path / "h.csv", ScalarField(g, np.exp(-np.abs(X))))
    write_measure(tmp_path / "mu.json", [((0, -1), (0, 1), 2.0)])
    r = run("qform", "--field", "h.csv", "--measure", "mu.json", "--n-eta", 3, "--out", "q")
    assert r.exit_code == 0, r.output
    rep = json.loads((tmp_path / "q" / "report.json").read_text())
    assert len(rep["results"]["values"]) == 3
    write_measure(tmp_path / "far.json", [((0, -1), (0, 5), 2.0)])
    assert run("qform", "--field", "h.csv", "--measure", "far.json").exit_code == 2
