"""Counter-based seed derivation.

Trials are grouped into fixed-size blocks.  Block ``b`` of an experiment with
master seed ``s`` draws from ``PCG64(splitmix64(s ^ splitmix64(b)))``, so a
block's stream depends only on ``(s, b)`` and never on which worker runs it.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def block_seed(master_seed: int, block: int) -> int:
    if not 0 <= master_seed <= MASK64:
        raise ValueError("master seed must be a 64-bit unsigned value")
    return splitmix64(master_seed ^ splitmix64(block))


def block_rng(master_seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(block_seed(master_seed, block)))


def blocks(trials: int, block_size: int) -> list[tuple[int, int]]:
    """``(block index, trial count)`` pairs covering ``trials``."""
    out = []
    b = 0
    while b * block_size < trials:
        out.append((b, min(block_size, trials - b * block_size)))
        b += 1
    return out
