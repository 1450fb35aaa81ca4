"""Synthetic trace generators.

Every generator is deterministic in its ``seed`` and returns a list of
``TraceRecord``.
"""
from smd_sim.controller.request import RequestKind
from smd_sim.exceptions import ConfigError
from smd_sim.frontend.trace import TraceRecord
from smd_sim.utils.rng import stream

BASE = 0x10000000
MiB = 1 << 20


def _kinds(rng, records, write_fraction):
    if not write_fraction:
        return [RequestKind.READ] * records
    writes = rng.random(records) < write_fraction
    return [RequestKind.WRITE if w else RequestKind.READ for w in writes]


def streaming(records=20000, bubbles=3, footprint=64 * MiB, stride=64, write_fraction=0.0, seed=0):
    """Sequential line touches over ``footprint`` bytes, wrapping around."""
    rng = stream(seed, "synthetic", "streaming")
    kinds = _kinds(rng, records, write_fraction)
    return [
        TraceRecord(bubbles, BASE + (i * stride) % footprint, kinds[i]) for i in range(records)
    ]


def random_uniform(records=20000, bubbles=10, footprint=256 * MiB, write_fraction=0.0, seed=0):
    """Uniformly random lines in ``footprint`` bytes."""
    rng = stream(seed, "synthetic", "random")
    lines = rng.integers(0, footprint // 64, size=records)
    kinds = _kinds(rng, records, write_fraction)
    return [TraceRecord(bubbles, BASE + int(line) * 64, kinds[i]) for i, line in enumerate(lines)]


def pointer_chase(records=20000, bubbles=10, footprint=256 * MiB, seed=0):
    """Loads that each depend on the previous one, over a random permutation of lines."""
    rng = stream(seed, "synthetic", "pointer-chase")
    lines = rng.choice(footprint // 64, size=min(records, footprint // 64), replace=False)
    return [
        TraceRecord(bubbles, BASE + int(lines[i % len(lines)]) * 64, dependent=True)
        for i in range(records)
    ]


def hot_row(records=20000, bubbles=2, aggressors=16, seed=0):
    """Uncached reads cycling over a handful of pages, a RowHammer-like access pattern.

    Each page lands in one DRAM row, so pages that share a bank keep closing each
    other's rows. Successive visits walk through the lines of a page.
    """
    if aggressors < 1:
        raise ConfigError("hot-row traces need at least one aggressor")
    rng = stream(seed, "synthetic", "hot-row")
    pages = rng.choice(1 << 16, size=aggressors, replace=False)
    return [
        TraceRecord(
            bubbles,
            BASE + int(pages[i % aggressors]) * 4096 + ((i // aggressors) % 64) * 64,
            uncached=True,
        )
        for i in range(records)
    ]


GENERATORS = {
    "streaming": streaming,
    "random": random_uniform,
    "pointer-chase": pointer_chase,
    "hot-row": hot_row,
}


def generate(kind, seed=0, **params):
    """Build a synthetic trace of ``kind`` with generator keyword arguments ``params``."""
    try:
        generator = GENERATORS[kind]
    except KeyError:
        raise ConfigError(
            f"Unknown synthetic trace {kind!r}, expected one of {', '.join(GENERATORS)}"
        ) from None
    try:
        return generator(seed=seed, **params)
    except TypeError as e:
        raise ConfigError(f"Bad parameters for {kind!r} trace: {e}") from e
