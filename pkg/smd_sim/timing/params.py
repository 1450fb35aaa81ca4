import logging
from dataclasses import dataclass, fields, replace
from functools import cached_property

from smd_sim.config import duration_ns, section
from smd_sim.exceptions import ConfigError

logger = logging.getLogger(__name__)

# Fields holding durations in nanoseconds rather than bus cycles
_DURATIONS = ("tREFI", "tREFW", "ARI")


@dataclass(frozen=True)
class TimingParams:
    """DDR4 timing for one device profile.

    Column, row and refresh constraints are in bus clock cycles. ``tREFI``,
    ``tREFW`` and ``ARI`` are durations in nanoseconds, use the ``*_cycles``
    properties for their cycle counts.
    """

    clock_freq_mhz: int = 1600
    tRCD: int = 22
    tRAS: int = 56
    tRP: int = 24
    tCL: int = 22
    tCWL: int = 16
    tBL: int = 4
    tWR: int = 24
    tWTR: int = 12
    tRTW: int = 12
    tRTP: int = 12
    tCCD: int = 8
    tRRD_S: int = 4
    tRRD_L: int = 8
    tFAW: int = 34
    tRFC: int = 560
    T_nack: int = 5
    tREFI: float = 3900.0
    tREFW: float = 32e6
    ARI: float = 60.0
    refs_per_window: int = 8192

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"Timing parameter {f.name} must be a number, got {value!r}")
            if value <= 0:
                raise ConfigError(f"Timing parameter {f.name} must be positive, got {value!r}")
        if self.tRAS < self.tRCD:
            raise ConfigError("tRAS must be at least tRCD")
        if self.tREFW < self.tREFI:
            raise ConfigError("tREFW must be at least tREFI")
        if self.ARI_cycles < self.tRC:
            raise ConfigError(
                f"ARI ({self.ARI_cycles} cycles) must cover tRC ({self.tRC} cycles) "
                "so a retried ACT to the same bank is legal"
            )
        if self.T_nack > self.tCL:
            logger.warning(
                "T_nack (%d) exceeds tCL (%d), column commands will wait for NACK resolution",
                self.T_nack,
                self.tCL,
            )

    @classmethod
    def from_config(cls, config=None, **overrides):
        """Build from ``smdsim.timing`` or from a timing section dict.

        Keys are the lower-cased field names, e.g. ``trcd`` or ``t_nack``.
        """
        cfg = section("timing") if config is None else config
        kwargs = {}
        for f in fields(cls):
            value = overrides.get(f.name, cfg.get(f.name.lower()))
            if value is None:
                continue
            kwargs[f.name] = duration_ns(value) if f.name in _DURATIONS else value
        return cls(**kwargs)

    def with_refresh_period(self, period):
        """Return a copy refreshing every row once per ``period`` (a duration)."""
        period = duration_ns(period)
        return replace(self, tREFW=period, tREFI=period / self.refs_per_window)

    @property
    def tRC(self):
        return self.tRAS + self.tRP

    @cached_property
    def tREFI_cycles(self):
        return ns_to_cycles(self.tREFI, self)

    @cached_property
    def tREFW_cycles(self):
        return ns_to_cycles(self.tREFW, self)

    @cached_property
    def ARI_cycles(self):
        return ns_to_cycles(self.ARI, self)

    @cached_property
    def gap_table(self):
        from smd_sim.timing.rules import build_gap_table

        return build_gap_table(self)


def ns_to_cycles(ns, params):
    """Smallest whole number of bus cycles covering ``ns`` nanoseconds.

    >>> ns_to_cycles(13.5, TimingParams())
    22
    >>> ns_to_cycles(7800, TimingParams())
    12480
    """
    if ns < 0:
        raise ValueError(f"Durations must be non-negative, got {ns}")
    ps = round(ns * 1000)
    return -(-ps * params.clock_freq_mhz // 1_000_000)


def cycles_to_ns(cycles, params):
    return cycles * 1000 / params.clock_freq_mhz
