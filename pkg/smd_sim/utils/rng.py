"""Seeded random streams.

Every stochastic component draws from its own ``numpy.random.Generator`` derived
from the experiment seed and a path naming the component, so adding a component
never shifts the draws of another.
"""
import mmh3
import numpy as np


def _spawn_key(part):
    if isinstance(part, (int, np.integer)) and part >= 0:
        return int(part)
    return mmh3.hash(str(part), signed=False)


def stream(seed, *path):
    """Return the generator for the component at ``path`` under ``seed``.

    >>> a = stream(7, "prp", 0, 3)
    >>> b = stream(7, "prp", 0, 3)
    >>> a.random() == b.random()
    True
    """
    if seed is None or seed < 0:
        raise ValueError(f"Seeds must be non-negative integers, got {seed!r}")
    sequence = np.random.SeedSequence(
        int(seed), spawn_key=tuple(_spawn_key(p) for p in path)
    )
    return np.random.default_rng(sequence)


def stream_seed(seed, *path):
    """A 32 bit integer seed for libraries that take plain integers, such as mmh3."""
    return int(stream(seed, *path).integers(0, 2**32))
