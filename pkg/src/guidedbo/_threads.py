"""Pin BLAS to one thread.

Multi-threaded BLAS makes reduction order (and so the last bits of every
linear-algebra result) depend on the host's core count, which breaks the
byte-identical trace contract; on small kernels the thread handoffs also
cost far more than they save. Runs therefore execute single-threaded and
scale across seeds with processes instead.
"""

from __future__ import annotations

import functools


@functools.lru_cache(maxsize=1)
def limit_blas_threads() -> None:
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # fall through: env vars may already pin it
        return
    threadpool_limits(limits=1)
