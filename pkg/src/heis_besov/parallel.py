"""Thread-count resolution and a deterministic parallel map."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "HEIS_BESOV_THREADS"
_threads: int | None = None


def set_threads(n: int | None) -> None:
    global _threads
    if n is not None and n < 1:
        raise ValueError("thread count must be >= 1")
    _threads = n


def get_threads() -> int:
    if _threads is not None:
        return _threads
    env = os.environ.get(ENV_VAR)
    if env:
        try:
            v = int(env)
        except ValueError as exc:
            raise ValueError(f"{ENV_VAR} must be a positive integer, got {env!r}") from exc
        if v >= 1:
            return v
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {env!r}")
    return os.cpu_count() or 1


def pmap(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Ordered map; results do not depend on the number of workers."""
    items = list(items)
    nt = min(get_threads(), len(items))
    if nt <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=nt) as ex:
        return list(ex.map(fn, items))
