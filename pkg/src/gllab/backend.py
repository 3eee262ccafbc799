"""Kernel backend selection.

The compiled extension is used when it imports and ``GLLAB_PURE_PYTHON`` is
unset or ``0``; otherwise the numpy implementation below runs.  Both produce
bit-identical iterates.
"""
from __future__ import annotations

import os
from functools import lru_cache

import numpy as np

try:
    if os.environ.get("GLLAB_PURE_PYTHON", "0") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _kernels
except ImportError:
    _kernels = None

BACKEND = "cython" if _kernels is not None else "python"
AVAILABLE = ("cython", "python") if _kernels is not None else ("python",)


@lru_cache(maxsize=16)
def _wavefronts(nx1: int, ny1: int):
    """Flat indices of interior nodes grouped by anti-diagonal i + j."""
    fronts = []
    for d in range(2, nx1 + ny1 - 3):
        i = np.arange(max(1, d - (ny1 - 2)), min(nx1 - 2, d - 1) + 1)
        j = d - i
        fronts.append(i * ny1 + j)
    return tuple(fronts)


def _psor_sweeps_numpy(h: np.ndarray, psi: float, omega: float, denom: float, sweeps: int):
    # nodes on one anti-diagonal only see updated values from the previous one,
    # so sweeping the fronts in order reproduces the lexicographic sweep
    nx1, ny1 = h.shape
    flat = h.reshape(-1)
    fronts = _wavefronts(nx1, ny1)
    for _ in range(sweeps):
        for k in fronts:
            old = flat[k]
            g = (flat[k - ny1] + flat[k + ny1] + flat[k - 1] + flat[k + 1]) / denom
            flat[k] = np.maximum(old + omega * (g - old), psi)


def psor_sweeps(h: np.ndarray, psi: float, omega: float, denom: float, sweeps: int,
                backend: str | None = None) -> None:
    """In-place projected SOR sweeps on a C-contiguous float64 array."""
    backend = BACKEND if backend is None else backend
    if backend not in AVAILABLE:
        raise ValueError(f"backend {backend!r} unavailable; have {AVAILABLE}")
    if h.dtype != np.float64 or not h.flags.c_contiguous:
        raise ValueError("h must be a C-contiguous float64 array")
    if backend == "cython":
        _kernels.psor_sweeps(h, float(psi), float(omega), float(denom), int(sweeps))
    else:
        _psor_sweeps_numpy(h, float(psi), float(omega), float(denom), int(sweeps))
