import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

from chaoskit.config import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker count: explicit argument, then CHAOSKIT_THREADS, then 1."""
    if threads is None:
        threads = get_settings()["THREADS"]
    return max(1, int(threads))


def batch_ranges(total: int, size: int) -> List[range]:
    """Split range(total) into consecutive chunks of at most `size`."""
    size = max(1, int(size))
    return [range(start, min(start + size, total)) for start in range(0, total, size)]


def map_ordered(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """Apply fn to every item, returning results in input order.

    Combining results in input order keeps every reduction independent of
    the number of workers.
    """
    items = list(items)
    workers = min(resolve_threads(threads), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    logger.debug(f"Dispatching {len(items)} tasks over {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
