"""Order-preserving parallel map.

Results always come back in input order, so output never depends on worker
scheduling.  The worker count comes from the ``threads`` argument, then the
``LIMINF_THREADS`` environment variable; 0 means one per CPU.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

from .errors import PreconditionError

_override: int | None = None


def set_threads(threads: int | None) -> None:
    """Process-wide default used when callers pass ``threads=None``."""
    global _override
    if threads is not None and threads < 0:
        raise PreconditionError("threads must be >= 0")
    _override = threads


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = _override
    if threads is None:
        env = os.environ.get("LIMINF_THREADS", "").strip()
        try:
            threads = int(env) if env else 1
        except ValueError as exc:
            raise PreconditionError(f"LIMINF_THREADS must be an integer, got {env!r}") from exc
    if threads < 0:
        raise PreconditionError("threads must be >= 0")
    if threads == 0:
        threads = os.cpu_count() or 1
    return threads


def pmap(func, items, threads: int | None = None, chunksize: int = 1) -> list:
    """``[func(x) for x in items]``, spread over processes when more than one worker is asked for.

    ``func`` and the items must be picklable for the parallel path.
    """
    items = list(items)
    workers = min(resolve_threads(threads), len(items))
    if workers <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=chunksize))
