"""Derivation of independent random streams from a master seed.

Every Monte Carlo replication owns generators derived from
``(master_seed, replication index, stream tag)``, so results are identical
for any worker count and any execution order.  The clock (sojourn times) and
the chain (state transitions) of one trajectory use separate streams, which
enforces their independence by construction.
"""

from __future__ import annotations

import numpy as np

CLOCK_STREAM = 0
CHAIN_STREAM = 1

__all__ = ["CLOCK_STREAM", "CHAIN_STREAM", "substream", "trajectory_streams"]


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Generator keyed by (master_seed, *path); same key, same stream."""
    return np.random.default_rng(np.random.SeedSequence(entropy=(int(master_seed), *map(int, path))))


def trajectory_streams(
    master_seed: int, trajectory_id: int = 0
) -> tuple[np.random.Generator, np.random.Generator]:
    """(clock, chain) generator pair for one trajectory."""
    return (
        substream(master_seed, trajectory_id, CLOCK_STREAM),
        substream(master_seed, trajectory_id, CHAIN_STREAM),
    )
