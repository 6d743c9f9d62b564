"""Deterministic block-parallel map.

Work is cut into fixed-size blocks that depend only on the sample count, each
block draws from its own counter-based substream, and results are
concatenated in block order. The worker count never changes the numbers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

BLOCK_SIZE = 4096
THREADS_ENV = "CONGSIEGEL_THREADS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def block_sizes(total: int, block: int = BLOCK_SIZE) -> list[int]:
    n = math.ceil(total / block)
    return [min(block, total - i * block) for i in range(n)]


def map_blocks(fn: Callable[[int, int], np.ndarray], total: int, workers: int | None = None,
               block: int = BLOCK_SIZE) -> np.ndarray:
    """Concatenate fn(block_index, block_size) over all blocks, in order."""
    sizes = block_sizes(total, block)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(sizes) == 1:
        parts = [fn(i, s) for i, s in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(fn, range(len(sizes)), sizes))
    return np.concatenate(parts) if parts else np.empty(0)


def map_items(fn: Callable, items, workers: int | None = None) -> list:
    workers = default_workers() if workers is None else max(1, int(workers))
    items = list(items)
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
