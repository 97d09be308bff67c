"""Thread-count policy for internal parallelism.

The worker count is bounded by the MGTPC_THREADS environment variable
(0 or unset = auto).  Work is always split into fixed-size chunks whose
boundaries do not depend on the thread count, so results are bit-identical
whether chunks run sequentially or on a pool.
"""

import os
from concurrent.futures import ThreadPoolExecutor

# Fixed chunk length (rows of an im2col matrix / windows of an attention
# batch); must never depend on the worker count.
CHUNK = 16384


def thread_count() -> int:
    raw = os.environ.get("MGTPC_THREADS", "0").strip()
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)


def run_chunks(fn, n_items: int, chunk: int = CHUNK) -> None:
    """Call ``fn(start, stop)`` over fixed chunks of ``range(n_items)``.

    ``fn`` must write its results into preallocated output (no return
    value is collected), which keeps the assembly order irrelevant.
    """
    bounds = [(s, min(s + chunk, n_items)) for s in range(0, n_items, chunk)]
    workers = thread_count()
    if workers == 1 or len(bounds) == 1:
        for s, e in bounds:
            fn(s, e)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, s, e) for s, e in bounds]
        for f in futures:
            f.result()
