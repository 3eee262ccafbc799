import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gllab.caselab import random_eta_sweep
from gllab.fileio import (clean, digest, dump_report, read_measure, read_state, strip_timestamp,
                          write_measure, write_state)
from gllab.glcore import GLParams
from gllab.grid import GridSpec, ScalarField, write_field
from gllab.parallel import ENV, ordered_map, thread_count
from gllab.qforms import line_integral
from gllab.suites import analytic_state


@pytest.mark.parametrize("raw", ["0", "-2", "two", "1.5"])
def test_thread_count_rejects(monkeypatch, raw):
    monkeypatch.setenv(ENV, raw)
    with pytest.raises(ValueError):
        thread_count()


def test_thread_count_values(monkeypatch):
    monkeypatch.delenv(ENV, raising=False)
    assert thread_count() == 1
    monkeypatch.setenv(ENV, " 4 ")
    assert thread_count() == 4


@given(st.lists(st.integers(), max_size=40), st.integers(1, 8))
def test_ordered_map_keeps_order(xs, n):
    assert ordered_map(lambda v: 3 * v + 1, xs, threads=n) == [3 * v + 1 for v in xs]


def test_sweep_independent_of_threads(monkeypatch):
    monkeypatch.setenv(ENV, "1")
    a = random_eta_sweep(0.5, 6, seed=7, n=32)
    monkeypatch.setenv(ENV, "4")
    b = random_eta_sweep(0.5, 6, seed=7, n=32)
    assert a == b


def test_state_round_trip(tmp_path):
    s = analytic_state(GridSpec.square(1.0, 16))
    path = write_state(tmp_path, s, GLParams(0.5, 0.3))
    s2, p2 = read_state(path)
    assert np.array_equal(s2.u.values, s.u.values)
    assert np.array_equal(s2.A.x, s.A.x) and np.array_equal(s2.A.y, s.A.y)
    assert (p2.epsilon, p2.h_ex, p2.lam) == (0.5, 0.3, 1.0)
    assert read_state(write_state(tmp_path, s, stem="bare"))[1] is None


def test_state_manifest_errors(tmp_path):
    (tmp_path / "m.json").write_text(json.dumps({"u": "x.csv"}))
    with pytest.raises(ValueError):
        read_state(tmp_path / "m.json")


def test_measure_round_trip(tmp_path):
    g = GridSpec.square(1.0, 8)
    write_field(tmp_path / "ac.csv", ScalarField(g, np.full(g.shape, 2.0)))
    write_measure(tmp_path / "mu.json", [((0, -1), (0, 1), 2.0), ((-1, 0), (1, 0), [0.0, 1.0])],
                  "ac.csv")
    mu = read_measure(tmp_path / "mu.json")
    assert mu.ac_density.values[0, 0] == 2.0
    segs = mu.line_part.segments
    assert segs[0].density == 2.0
    # linear density from 0 to 1 along a segment of length 2
    from gllab.qforms import LineMeasurePart
    val = line_integral(lambda x, y: np.ones_like(x), LineMeasurePart(segs[1:]))
    assert val == pytest.approx(1.0, abs=1e-13)


def test_measure_rejects_bad_density(tmp_path):
    (tmp_path / "mu.json").write_text(json.dumps(
        {"ac_density": None, "segments": [{"p0": [0, 0], "p1": [1, 0], "density": [1.0]}]}))
    with pytest.raises(ValueError):
        read_measure(tmp_path / "mu.json")


def test_clean_handles_numpy_and_non_finite():
    out = clean({"a": np.float64(1.5), "b": [np.int64(2), math.inf], 3: np.array([math.nan]),
                 "c": np.bool_(True)})
    assert out == {"a": 1.5, "b": [2, "inf"], "3": ["nan"], "c": True}
    json.dumps(out, allow_nan=False)


def test_report_is_deterministic_apart_from_timestamp(tmp_path):
    rep = {"z": 1, "a": {"y": np.float64(0.1), "x": -math.inf}}
    t1 = dump_report(tmp_path / "r.json", rep)
    t2 = dump_report(None, rep)
    assert strip_timestamp(t1) == strip_timestamp(t2)
    assert "timestamp" in json.loads(t1)
    assert t1.index('"a"') < t1.index('"z"')


def test_digest_depends_on_files(tmp_path):
    f = tmp_path / "f.txt"
    f.write_text("one")
    d1 = digest({"k": 1}, [f])
    f.write_text("two")
    assert digest({"k": 1}, [f]) != d1
    assert digest({"k": 1}) == digest({"k": 1})
