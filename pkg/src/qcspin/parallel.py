"""Ordered parallel map used by the grid scans."""

import os
from concurrent.futures import ThreadPoolExecutor


def resolve_workers(threads):
    """0 means one worker per CPU."""
    if threads is None or threads == 1:
        return 1
    if threads <= 0:
        return os.cpu_count() or 1
    return int(threads)


def parallel_map(fn, items, workers=1):
    """``[fn(x) for x in items]``, optionally on a thread pool.

    Results come back in input order, so downstream reductions are
    independent of scheduling.
    """
    items = list(items)
    workers = resolve_workers(workers)
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
