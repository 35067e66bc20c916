"""Deterministic seeding and an ordered parallel map.

Every task derives its own 64-bit seed from the master seed plus a label and
grid indices, so results do not depend on scheduling or worker count. BLAS
is pinned to one thread inside each task for the same reason: threaded
reductions can change the last bits of a dense eigensolve.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Iterable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits


def derive_seed(master: int, label: str, *indices: Any) -> int:
    """Stable 64-bit seed from ``blake2b(master | label | indices)``."""
    payload = "|".join([str(int(master)), label, *(repr(i) for i in indices)])
    return int.from_bytes(hashlib.blake2b(payload.encode(), digest_size=8).digest(), "little")


def task_rng(master: int, label: str, *indices: Any) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, label, *indices))


def _pinned_call(fn_and_arg):
    fn, arg = fn_and_arg
    with threadpool_limits(limits=1):
        return fn(arg)


def parallel_map(fn: Callable, items: Iterable, workers: int = 1, chunksize: int = 1) -> list:
    """``[fn(x) for x in items]`` in input order, optionally over processes.

    ``fn`` must be a module-level callable so it can be pickled.
    """
    items: Sequence = list(items)
    jobs = [(fn, x) for x in items]
    if workers <= 1 or len(items) <= 1:
        return [_pinned_call(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_pinned_call, jobs, chunksize=chunksize))
