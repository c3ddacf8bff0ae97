import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    """Worker cap from ``SWISTAB_THREADS``; all cores when unset."""
    raw = os.environ.get("SWISTAB_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def ordered_map(fn, chunks):
    """``list(map(fn, chunks))``, fanned out over threads when allowed.

    Results come back in input order, so reductions over them do not depend
    on scheduling.
    """
    chunks = list(chunks)
    workers = min(worker_count(), len(chunks))
    if workers <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))
