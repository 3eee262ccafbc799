"""State manifests, measure files and deterministic JSON reports."""
from __future__ import annotations

import hashlib
import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .glcore import GLParams, GLState
from .grid import ScalarField, VectorField, read_field, write_field
from .qforms import LineMeasurePart, Segment, VorticityMeasure


def write_state(directory, s: GLState, p: GLParams | None = None, stem: str = "state") -> Path:
    """Write ``u`` and ``A`` field files plus a manifest; returns the manifest path."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    u_name, a_name = f"{stem}_u.csv", f"{stem}_A.csv"
    write_field(d / u_name, s.u)
    write_field(d / a_name, s.A)
    manifest = {"grid": s.grid.to_dict(), "u": u_name, "A": a_name}
    if p is not None:
        manifest["params"] = {"epsilon": p.epsilon, "h_ex": p.h_ex, "lambda": p.lam}
    path = d / f"{stem}.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def read_state(manifest) -> tuple[GLState, GLParams | None]:
    path = Path(manifest)
    meta = json.loads(path.read_text())
    for key in ("u", "A"):
        if key not in meta:
            raise ValueError(f"{path}: manifest lacks '{key}'")
    u = read_field(path.parent / meta["u"], as_complex=True)
    A = read_field(path.parent / meta["A"])
    if not isinstance(A, VectorField):
        raise ValueError(f"{path}: A must be a vector field file")
    if u.grid != A.grid:
        raise ValueError(f"{path}: u and A grids differ")
    p = None
    if "params" in meta:
        q = meta["params"]
        p = GLParams(q["epsilon"], q.get("h_ex", 0.0), q.get("lambda", 1.0))
    return GLState(u, A), p


def _density_from_json(value):
    if isinstance(value, (int, float)):
        return float(value)
    samples = np.asarray(value, dtype=float)
    if samples.ndim != 1 or samples.size < 2 or not np.all(np.isfinite(samples)):
        raise ValueError("sampled density must be a finite list of at least two values")
    return samples


def _segment(p0, p1, density) -> Segment:
    if isinstance(density, np.ndarray):
        s_nodes = np.linspace(0.0, 1.0, density.size)
        x0, y0 = p0
        dxs, dys = p1[0] - p0[0], p1[1] - p0[1]
        norm2 = dxs * dxs + dys * dys

        def rho(x, y, s_nodes=s_nodes, vals=density):
            s = ((np.asarray(x) - x0) * dxs + (np.asarray(y) - y0) * dys) / norm2
            return np.interp(s, s_nodes, vals)

        return Segment(p0, p1, rho)
    return Segment(p0, p1, density)


def read_measure(path) -> VorticityMeasure:
    """``{ac_density: path|null, segments: [{p0, p1, density}]}``; sampled densities are
    uniform in arclength and interpolated linearly."""
    path = Path(path)
    meta = json.loads(path.read_text())
    ac = None
    if meta.get("ac_density"):
        fld = read_field(path.parent / meta["ac_density"])
        if not isinstance(fld, ScalarField):
            raise ValueError("ac_density must be a scalar field file")
        ac = fld
    segs = [_segment(tuple(sg["p0"]), tuple(sg["p1"]), _density_from_json(sg.get("density", 1.0)))
            for sg in meta.get("segments", [])]
    return VorticityMeasure(ac, LineMeasurePart(segs) if segs else None)


def write_measure(path, segments, ac_density_file: str | None = None) -> None:
    """``segments`` holds ``(p0, p1, density)`` with a float or list density."""
    out = {"ac_density": ac_density_file,
           "segments": [{"p0": list(map(float, p0)), "p1": list(map(float, p1)),
                         "density": density if isinstance(density, (int, float)) else list(map(float, density))}
                        for p0, p1, density in segments]}
    Path(path).write_text(json.dumps(out, sort_keys=True, indent=2) + "\n")


# -- reports ------------------------------------------------------------------------

def clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def digest(config: dict, files=()) -> str:
    h = hashlib.sha256(json.dumps(clean(config), sort_keys=True).encode())
    for f in files:
        h.update(Path(f).read_bytes())
    return h.hexdigest()


def dump_report(path, report: dict) -> str:
    body = dict(report)
    body["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    text = json.dumps(clean(body), sort_keys=True, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def strip_timestamp(text: str) -> dict:
    body = json.loads(text)
    body.pop("timestamp", None)
    return body
