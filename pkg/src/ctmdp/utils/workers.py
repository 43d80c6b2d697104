from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

log = logging.getLogger(__name__)

T = TypeVar("T")

THREADS_ENV = "CTMDP_THREADS"


def worker_count() -> int:
    """Worker cap from CTMDP_THREADS, defaulting to the hardware parallelism."""
    raw = str(os.environ.get(THREADS_ENV, "")).strip()
    try:
        val = int(raw) if raw else 0
    except ValueError:
        log.warning("Ignoring non-integer %s=%r", THREADS_ENV, raw)
        val = 0
    if val <= 0:
        val = os.cpu_count() or 1
    return max(1, val)


def chunk_bounds(n: int, n_chunks: int) -> List[tuple[int, int]]:
    """Split range(n) into at most n_chunks contiguous half-open blocks."""
    n_chunks = max(1, min(n_chunks, n))
    step, rem = divmod(n, n_chunks)
    out: List[tuple[int, int]] = []
    lo = 0
    for c in range(n_chunks):
        hi = lo + step + (1 if c < rem else 0)
        out.append((lo, hi))
        lo = hi
    return out


def map_indexed(fn: Callable[[int, int], Sequence[T]], n: int, *, workers: int | None = None) -> List[T]:
    """
    Evaluate ``fn(lo, hi)`` over contiguous blocks of range(n) and concatenate in
    index order. The result does not depend on the number of workers as long as
    ``fn`` only depends on the indices it is given.
    """
    workers = worker_count() if workers is None else max(1, int(workers))
    blocks = chunk_bounds(n, workers * 4)
    if workers == 1 or len(blocks) == 1:
        parts = [fn(lo, hi) for lo, hi in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="ctmdp") as ex:
            futures = [ex.submit(fn, lo, hi) for lo, hi in blocks]
            parts = [f.result() for f in futures]
    out: List[T] = []
    for part in parts:
        out.extend(part)
    return out
