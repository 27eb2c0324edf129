"""Ordered thread-pool map capped by the ``ELDA_THREADS`` environment variable."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_cap(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("ELDA_THREADS", "").strip()
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def map_ordered(fn, items, threads: int | None = None) -> list:
    """``[fn(x) for x in items]``, possibly concurrent; result order is input order."""
    items = list(items)
    n = min(thread_cap(threads), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
