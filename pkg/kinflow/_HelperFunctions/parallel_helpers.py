import logging
from concurrent.futures import ThreadPoolExecutor
import numpy as np

logger = logging.getLogger(__name__)


def chunk_sizes(n: int, chunk_size: int) -> list:
    if n < 1 or chunk_size < 1:
        raise ValueError(f"n and chunk_size must be positive (got n={n}, chunk_size={chunk_size})")
    full, rest = divmod(int(n), int(chunk_size))
    return [int(chunk_size)] * full + ([rest] if rest else [])


def map_seeded_chunks(fn, n: int, seed: int, chunk_size: int, threads: int = 1) -> list:
    """
    Splits n draws into chunks and calls fn(size, seed_sequence) for each, with one child stream
    per chunk spawned from SeedSequence(seed). Results come back in chunk order, so the outcome
    does not depend on the thread count.

    Parameters
    ------------
    fn : callable(int, numpy.random.SeedSequence)
    n : int
        total number of draws
    seed : int
    chunk_size : int
    threads : int
        worker threads, 1 runs inline
    """
    sizes = chunk_sizes(n, chunk_size)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    if threads <= 1 or len(sizes) == 1:
        return [fn(size, stream) for size, stream in zip(sizes, streams)]
    logger.debug(f"running {len(sizes)} chunks on {threads} threads")
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, sizes, streams))
