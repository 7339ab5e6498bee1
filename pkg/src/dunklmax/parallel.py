"""Order-preserving parallel map with an environment-controlled worker cap."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

WORKER_ENV = "DUNKLMAX_WORKERS"


def worker_count():
    """Workers allowed by ``DUNKLMAX_WORKERS`` (default 1, i.e. serial)."""
    raw = os.environ.get(WORKER_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKER_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def pmap(func, items, workers=None):
    """``list(map(func, items))``, run on a thread pool when workers > 1.

    Results come back in input order, so reductions over them do not depend
    on the worker count.
    """
    items = list(items)
    n = worker_count() if workers is None else max(1, int(workers))
    if n == 1 or len(items) < 2:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))
