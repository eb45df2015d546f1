"""Deterministic stream derivation from a single 64-bit seed.

Every random quantity in the package is drawn from a generator produced by
``substream``.  Philox is counter based, so streams for distinct derivation
keys never overlap and a path can be regenerated in isolation.
"""

from __future__ import annotations

import numpy as np

__all__ = ["substream", "MAX_SEED"]

MAX_SEED = 2**64 - 1


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for derivation key ``key`` under ``seed``.

    Args:
        seed: master seed, 0 <= seed < 2**64.
        key: integers identifying the consumer, e.g. a path index, or
            (stage, path) pairs.  The same (seed, key) always yields the
            same stream regardless of how many other streams were drawn.
    """
    if not 0 <= int(seed) <= MAX_SEED:
        raise ValueError(f"seed must fit in 64 bits, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
