"""Seeded random streams.

Every randomized routine takes either a 64-bit integer seed or a
``numpy.random.Generator``. Integer seeds are expanded through
``numpy.random.SeedSequence`` into PCG64 generators, and independent child
streams (one per restart, bootstrap replicate, dataset, ...) are obtained
by spawning the seed sequence. The same seed therefore yields the same
numbers on every platform numpy supports.
"""

import secrets

import numpy as np

SEED_BITS = 64


def fresh_seed():
    """Draw a new 64-bit master seed from the OS entropy pool."""
    return secrets.randbits(SEED_BITS)


def generator(seed):
    """Return a PCG64 generator for ``seed`` (an int or an existing generator)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def child_seeds(seed, count):
    """Derive ``count`` independent 64-bit seeds from a master seed."""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def draw_seed(rng):
    """Draw a 64-bit seed from an existing generator."""
    return int(rng.integers(0, 2**SEED_BITS, dtype=np.uint64))
