"""Seeded random streams.

Every random draw in the package comes from a PCG64 generator whose seed is
derived from a master seed plus a tuple of integer keys through numpy's
``SeedSequence``. Streams for different purposes (scenario sampling, agent
initialization, exploration, the random baseline) therefore never overlap,
and a stream only depends on its own keys, not on scheduling order.

Key layout used across the package::

    (master_seed, PURPOSE, run, m, n)
"""

import numpy as np

SCENARIO = 0
AGENT_INIT = 1
AGENT_EXPLORE = 2
RANDOM_SCHEME = 3
SHADOWING = 4


def child_seed(master_seed, *keys):
    """Integer entropy tuple for a child stream (usable as a seed elsewhere)."""
    if master_seed < 0 or any(k < 0 for k in keys):
        raise ValueError("seeds and stream keys must be non-negative integers")
    return np.random.SeedSequence([int(master_seed), *map(int, keys)])


def make_rng(master_seed, *keys):
    """Independent PCG64 generator for the stream ``(master_seed, *keys)``."""
    return np.random.Generator(np.random.PCG64(child_seed(master_seed, *keys)))
