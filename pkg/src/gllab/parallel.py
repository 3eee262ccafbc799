"""Thread cap from ``GLLAB_THREADS`` and an order-preserving map."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV = "GLLAB_THREADS"


def thread_count() -> int:
    """Validated value of ``GLLAB_THREADS``; 1 when unset."""
    raw = os.environ.get(ENV, "").strip()
    if raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{ENV} must be a positive integer, got {raw!r}")
    return n


def ordered_map(fn, items, threads: int | None = None) -> list:
    """``[fn(x) for x in items]`` on up to ``threads`` workers; results keep input order."""
    items = list(items)
    n = thread_count() if threads is None else threads
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
