import os
from concurrent.futures import ProcessPoolExecutor


def worker_count():
    """Worker cap from ``STA_THREADS``, else the CPU count."""
    env = os.environ.get("STA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def parallel_map(fn, items):
    """Order-preserving map; falls back to a plain loop for one worker."""
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
