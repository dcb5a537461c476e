"""Deterministic seed splitting.

Every random draw in the package comes from a generator derived from a
master seed plus a tuple of integer keys, so results never depend on call
order or on a global RNG.
"""

import numpy as np

_MASK64 = (1 << 64) - 1

# spawn-key tags, one per operation family
SAMPLE_PATH = 1
BLOCK_SAMPLE = 2
CONDITIONAL = 3
CONSTRUCT = 4
LEMMA = 5
RATE = 6
EXTRACT = 7


def generator(seed, *keys):
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(k) & _MASK64 for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed, *keys):
    """Return a 64-bit child seed for ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(k) & _MASK64 for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
