"""Compare the compiled and numpy PSOR sweeps.

    python benchmarks/bench_psor.py --n 64 128 256 --sweeps 50
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from gllab import backend
from gllab.obstacle import default_grid, obstacle_level, optimal_omega, OMEGA_MAX


def time_sweeps(n: int, sweeps: int, name: str, repeats: int) -> tuple[float, np.ndarray]:
    g = default_grid(n)
    psi = obstacle_level(0.2)
    omega = min(OMEGA_MAX, optimal_omega(g))
    denom = 4.0 + g.hx * g.hx
    best = float("inf")
    out = None
    for _ in range(repeats):
        h = np.ones(g.shape)
        t0 = time.perf_counter()
        backend.psor_sweeps(h, psi, omega, denom, sweeps, name)
        best = min(best, time.perf_counter() - t0)
        out = h
    return best, out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--sweeps", type=int, default=50)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)
    if "cython" not in backend.AVAILABLE:
        print(json.dumps({"error": "compiled backend not built"}))
        return 1
    rows = []
    for n in args.n:
        tc, hc = time_sweeps(n, args.sweeps, "cython", args.repeats)
        tp, hp = time_sweeps(n, args.sweeps, "python", args.repeats)
        rows.append({"n": n, "sweeps": args.sweeps, "cython_s": tc, "python_s": tp,
                     "speedup": tp / tc, "bit_identical": bool(np.array_equal(hc, hp))})
    for r in rows:
        print(f"n={r['n']:4d}  cython {r['cython_s'] * 1e3:9.2f} ms  python {r['python_s'] * 1e3:9.2f} ms"
              f"  speedup {r['speedup']:6.1f}x  identical={r['bit_identical']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
