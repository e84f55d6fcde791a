from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Iterator, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1, max_in_flight: int | None = None) -> Iterator[R]:
    """Lazy map that keeps input order and at most ``max_in_flight`` pending calls.

    ``workers <= 1`` runs inline. Exceptions surface at the item that raised them.
    """
    if workers <= 1:
        yield from map(fn, items)
        return
    limit = max_in_flight or 2 * workers
    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending: deque = deque()
        for item in items:
            pending.append(pool.submit(fn, item))
            if len(pending) >= limit:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()
