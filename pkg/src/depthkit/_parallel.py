"""Chunked thread-pool helpers.

Every caller splits work into pieces whose per-element arithmetic does not
depend on the split, and gathers results in submission order, so output is
bitwise identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def split_range(n: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, n)) if n > 0 else 1
    bounds = [n * i // parts for i in range(parts + 1)]
    return [(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def ordered_map(fn: Callable[[T], R], items: Sequence[T] | Iterable[T], workers: int = 1) -> list[R]:
    """``list(map(fn, items))``, optionally on a thread pool; order preserved."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
