"""
Random streams and worker pool shared by the bootstrap code.

Every random draw comes from its own counter-based generator keyed by
``(root_seed, domain, *keys)``.  The domain tag keeps the mixture, the
quasilinear generator, the bootstrap and the interval bootstrap on
disjoint streams even when they share a seed, and per-replication keys
make results independent of how work is split across threads.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# Domain tags, always the first key after the root seed.
STREAM_MIXTURE = 0
STREAM_QUASILINEAR = 1
STREAM_BOOTSTRAP = 2
STREAM_INTERVAL = 3


def spawn_generator(root_seed: int, domain: int, *keys: int) -> np.random.Generator:
    """Philox generator for the stream ``(root_seed, domain, *keys)``.

    The keys form a ``SeedSequence`` spawn key rather than extra entropy
    words, so ``(s, d, 0)`` and ``(s, d, 0, 0)`` are different streams.
    """
    spawn_key = (int(domain), *(int(k) for k in keys))
    seq = np.random.SeedSequence(int(root_seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(seq))


def thread_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """``list(map(fn, items))``, optionally on a thread pool; order is preserved."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.debug("Dispatching %d tasks to %d threads", len(items), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
