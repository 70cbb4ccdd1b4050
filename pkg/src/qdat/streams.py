"""Deterministic block-seeded random streams.

Trials are cut into fixed-size blocks; block b draws from
``SeedSequence(seed, spawn_key=(b,))``.  Results depend only on the master
seed and the trial count, never on how many workers process the blocks or
in which order they finish.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

BLOCK_SIZE = 1 << 16

T = TypeVar("T")


def block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def blocks(trials: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    """(block index, trials in block) pairs covering ``trials``."""
    out = []
    b = 0
    remaining = trials
    while remaining > 0:
        n = min(block_size, remaining)
        out.append((b, n))
        remaining -= n
        b += 1
    return out


def run_blocks(seed: int, trials: int, work: Callable[[np.random.Generator, int], T],
               workers: int = 1, block_size: int = BLOCK_SIZE) -> list[T]:
    """Apply ``work(rng, n)`` to every block; results come back in block order."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    jobs = blocks(trials, block_size)

    def one(job):
        b, n = job
        return work(block_generator(seed, b), n)

    if workers <= 1 or len(jobs) <= 1:
        return [one(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, jobs))
