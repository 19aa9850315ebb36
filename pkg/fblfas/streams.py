"""
Counter-based random streams for reproducible Monte-Carlo.

Trials are grouped in fixed-size blocks. Block b of a run seeded with s draws
from Philox keyed by SeedSequence(s, spawn_key=(tag, b)), so the result of a
run depends on (seed, n_trials) only, whatever the number of workers.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from enum import IntEnum
from typing import Callable, TypeVar

import numpy as np
from tqdm import tqdm

logger = logging.getLogger(__name__)

T = TypeVar("T")

BLOCK_SIZE = 1024


class StreamTag(IntEnum):
    """
    Disjoint stream families, one per kind of simulation.
    """

    CHANNEL = 1
    CODEWORD = 2
    SINR = 3
    ML_DECODER = 4
    VALIDATION = 5


def generator(seed: int, tag: StreamTag, index: int = 0) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed}")
    sequence = np.random.SeedSequence(seed, spawn_key=(int(tag), index))
    return np.random.Generator(np.random.Philox(sequence))


def blocks(n_trials: int) -> list[tuple[int, int]]:
    """
    (start, stop) trial ranges of every block.
    """
    return [
        (start, min(start + BLOCK_SIZE, n_trials))
        for start in range(0, n_trials, BLOCK_SIZE)
    ]


def map_blocks(
    fn: Callable[[int, np.random.Generator], T],
    n_trials: int,
    seed: int,
    tag: StreamTag,
    n_workers: int = 1,
    progress: bool = False,
    desc: str = "monte-carlo",
) -> list[T]:
    """
    Calls fn(block_size, rng) for every block and returns the results in
    block order.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    if n_workers < 1:
        raise ValueError(f"n_workers must be >= 1, got {n_workers}")

    ranges = blocks(n_trials)
    logger.debug(f"{desc}: {n_trials} trials in {len(ranges)} blocks, {n_workers} workers")

    def run(index: int) -> T:
        start, stop = ranges[index]
        return fn(stop - start, generator(seed, tag, index))

    indices = range(len(ranges))
    if n_workers == 1:
        return [run(i) for i in tqdm(indices, desc=desc, disable=not progress)]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(
            tqdm(pool.map(run, indices), total=len(ranges), desc=desc, disable=not progress)
        )
