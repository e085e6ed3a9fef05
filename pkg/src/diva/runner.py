"""Bounded-parallelism helper for per-item pipeline stages."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

from .errors import ValidationError

T = TypeVar("T")
R = TypeVar("R")


def run_bounded(fn: Callable[[T], R], items: Sequence[T], max_workers: int = 4) -> list[R]:
    """Apply fn to every item, at most max_workers in flight.

    Results come back in input order; the first raised exception
    propagates. Width 1 degenerates to a plain loop.
    """
    if max_workers < 1:
        raise ValidationError("max_workers must be >= 1")
    if max_workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        return list(executor.map(fn, items))
