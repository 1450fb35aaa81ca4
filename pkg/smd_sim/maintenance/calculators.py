"""Closed-form quantities behind the maintenance mechanisms."""
import math

from smd_sim.config import duration_ns
from smd_sim.exceptions import ConfigError
from smd_sim.timing.params import cycles_to_ns


def vr_factor(rt_weak_row, refresh_period):
    """How many refresh periods a strong row may go without refresh.

    Both arguments are durations. The weak row retention time must be a whole
    multiple of the refresh period.

    >>> vr_factor("128 ms", "32 ms")
    4
    """
    retention = round(duration_ns(rt_weak_row) * 1000)
    period = round(duration_ns(refresh_period) * 1000)
    if period == 0:
        raise ConfigError("The refresh period must be positive")
    factor, rest = divmod(retention, period)
    if rest or factor == 0:
        raise ConfigError(
            f"Weak row retention time {rt_weak_row} is not a whole multiple of "
            f"the refresh period {refresh_period}"
        )
    return factor


def act_trefw(timing):
    """Most activations one bank can receive in a refresh window."""
    return timing.tREFW_cycles // timing.tRC


def drp_required_counters(timing, act_max, activations=None):
    """Smallest counter table that catches every row reaching ``act_max``.

    That is the smallest ``N`` with ``N > activations / act_max - 1``, where
    ``activations`` defaults to ``act_trefw(timing)``.
    """
    if act_max < 1:
        raise ConfigError("act_max must be positive")
    activations = act_trefw(timing) if activations is None else activations
    return max(1, activations // act_max)


def act_trefw_from_counters(counters, act_max):
    """Activations per window for which ``counters`` entries are enough at ``act_max``.

    The inverse of ``drp_required_counters``: ``counters * act_max``. Windows
    of up to ``(counters + 1) * act_max - 1`` activations are still covered.
    """
    return counters * act_max


def scrub_row_cycles(timing, errors=0, codewords=128, writeback_cycles=4):
    """Cycles to read, check and correct every codeword of one row."""
    if errors < 0:
        raise ValueError("The number of erroneous codewords cannot be negative")
    return timing.tRCD + codewords * timing.tBL + timing.tRP + errors * writeback_cycles


def scrub_row_latency(timing, errors=0, codewords=128, writeback_cycles=4):
    """``scrub_row_cycles`` in nanoseconds."""
    return cycles_to_ns(
        scrub_row_cycles(timing, errors, codewords, writeback_cycles), timing
    )


def neighbors(row, distance, geometry):
    """Rows within ``distance`` of ``row`` in the same bank, excluding ``row``."""
    if distance < 0:
        raise ValueError("The blast distance cannot be negative")
    lo = max(0, row - distance)
    hi = min(geometry.rows_per_bank - 1, row + distance)
    return [r for r in range(lo, hi + 1) if r != row]


def mrt_bits(geometry):
    """Storage for one bank's marked row table: a valid bit and a row offset per region."""
    return geometry.regions_per_bank * (1 + math.ceil(math.log2(geometry.rows_per_region)))


def counter_table_bits(counters, geometry, act_max_window):
    """Storage for one bank's counter table plus its spillover counter."""
    count_bits = math.ceil(math.log2(act_max_window + 1))
    row_bits = math.ceil(math.log2(geometry.rows_per_bank))
    return counters * (row_bits + count_bits) + count_bits


def cbf_bits(size, counter_bits=16):
    """Storage for the two counting Bloom filters of one bank."""
    return 2 * size * counter_bits
