"""Order-preserving parallel map over independent grid points."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

ENV_THREADS = "SCHMID_LAB_THREADS"


def default_workers() -> int:
    raw = os.environ.get(ENV_THREADS, "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def pmap(fn, items, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, optionally across processes.

    Results are indexed by input position, never by completion order, so the
    output is identical for any worker count.
    """
    items = list(items)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
