import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

from dotenv import load_dotenv

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "ADAPTIVE_RIDGE_THREADS"

logger = logging.getLogger(__name__)


def max_workers() -> int:
    load_dotenv()
    raw = os.getenv(THREADS_ENV, "0").strip() or "0"
    try:
        requested = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {THREADS_ENV}={raw!r}")
        requested = 0
    if requested <= 0:
        return os.cpu_count() or 1
    return requested


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
