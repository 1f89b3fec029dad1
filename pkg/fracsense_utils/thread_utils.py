# Copyright Fracsense Authors 2026
import concurrent.futures
import os
from typing import Callable, List, Sequence, TypeVar

from .logger import logger

T = TypeVar("T")
R = TypeVar("R")


def resolve_thread_count(threads: int) -> int:
    """0 (or a negative value) means "pick for me": one thread per core, at most 8."""
    if threads > 0:
        return threads
    return max(1, min(8, os.cpu_count() or 1))


def chunked(n: int, chunk_size: int) -> List[range]:
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be positive, got {chunk_size}")
    return [range(start, min(n, start + chunk_size)) for start in range(0, n, chunk_size)]


def ordered_map(fn: Callable[[T], R], items: Sequence[T], threads: int = 1) -> List[R]:
    """Map `fn` over `items` on a thread pool and return results in input order.

    Results never depend on the thread count: every item is computed independently and
    lands in its own slot.
    """
    n_threads = resolve_thread_count(threads)
    if n_threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.debug(f"Mapping {len(items)} items over {n_threads} threads")
    with concurrent.futures.ThreadPoolExecutor(max_workers=n_threads) as executor:
        return list(executor.map(fn, items))
