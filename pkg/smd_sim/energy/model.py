import logging
from collections import Counter
from dataclasses import dataclass, fields
from functools import singledispatchmethod

from smd_sim.config import SimConfig, section
from smd_sim.exceptions import ConfigError
from smd_sim.maintenance.base import MaintenanceEvent
from smd_sim.timing.commands import Command, CommandKind

logger = logging.getLogger(__name__)

CLASSES = ("act", "pre", "rd", "wr", "ref", "nack", "internal_refresh", "scrub", "background")
COMMAND_CLASSES = CLASSES[:6]


@dataclass(frozen=True)
class EnergyConfig:
    """Energy per operation in picojoules and background power in milliwatts, per rank."""

    act_pj: int = 1700
    pre_pj: int = 700
    rd_pj: int = 1800
    wr_pj: int = 1900
    ref_row_pj: int = 2400
    internal_refresh_row_pj: int = 2400
    scrub_codeword_pj: int = 120
    nack_pj: int = 200
    active_background_mw: int = 320
    idle_background_mw: int = 250

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ConfigError(f"Energy constant {f.name} must be a non-negative integer, got {value!r}")

    @classmethod
    def from_config(cls, config=None, **overrides):
        cfg = section("energy") if config is None else SimConfig(config)
        values = {f.name: cfg.get(f.name, f.default) for f in fields(cls)}
        values.update(overrides)
        return cls(**values)


class EnergyAccumulator:
    """Integer picojoule energy of everything that happened on one channel.

    Parameters
    ----------
    config: EnergyConfig
    rows_per_ref: int
        Rows one REF command refreshes across the whole rank.
    chips: int
        Chips whose maintenance events are reported separately. Each chip's
        share of an internal operation is ``1 / chips`` of the rank's energy.
    clock_mhz: int
        Bus clock, for integrating background power.
    """

    def __init__(self, config=None, rows_per_ref=1, chips=1, clock_mhz=1600):
        self.config = EnergyConfig() if config is None else config
        self.rows_per_ref = rows_per_ref
        self.chips = chips
        self.clock_mhz = clock_mhz
        self.breakdown = Counter({c: 0 for c in CLASSES})
        self.counts = Counter()

    def __repr__(self):
        return f"<EnergyAccumulator total={self.total} pJ>"

    @property
    def total(self):
        return sum(self.breakdown.values())

    @singledispatchmethod
    def account(self, item):
        raise TypeError(f"Cannot account energy for {item!r}")

    @account.register
    def _(self, command: Command):
        c = self.config
        kind = command.kind
        if kind is CommandKind.ACT:
            if command.nacked:
                self._add("nack", c.nack_pj)
            else:
                self._add("act", c.act_pj)
        elif kind is CommandKind.PRE:
            self._add("pre", c.pre_pj)
        elif kind is CommandKind.RD:
            self._add("rd", c.rd_pj)
        elif kind is CommandKind.WR:
            self._add("wr", c.wr_pj)
        elif kind is CommandKind.REF:
            self._add("ref", c.ref_row_pj * self.rows_per_ref)
        return self

    @account.register
    def _(self, event: MaintenanceEvent):
        c = self.config
        if event.source == "ddr4-ref":
            # REF energy is charged per command
            return self
        if event.kind == "scrub":
            energy = c.internal_refresh_row_pj + c.scrub_codeword_pj * event.codewords
            self._add("scrub", energy // self.chips)
        else:
            self._add("internal_refresh", c.internal_refresh_row_pj // self.chips)
        return self

    def add_background(self, active_cycles, idle_cycles):
        """Integrate background power over cycles with a row open and cycles without."""
        c = self.config
        energy = (
            c.active_background_mw * active_cycles + c.idle_background_mw * idle_cycles
        ) * 1000 // self.clock_mhz
        self._add("background", energy)
        return self

    def _add(self, cls, pj):
        self.breakdown[cls] += pj
        self.counts[cls] += 1

    def merge(self, other):
        """A new accumulator holding the energy of both."""
        merged = EnergyAccumulator(self.config, self.rows_per_ref, self.chips, self.clock_mhz)
        merged.breakdown = self.breakdown + other.breakdown
        merged.breakdown.update({c: 0 for c in CLASSES if c not in merged.breakdown})
        merged.counts = self.counts + other.counts
        return merged


def account(event, config, accumulator=None):
    """Add the energy of ``event`` to ``accumulator`` and return it."""
    if accumulator is None:
        accumulator = EnergyAccumulator(config)
    return accumulator.account(event)


def command_energy(commands, config=None, rows_per_ref=1):
    """Per class energy of a command log, recomputed from scratch."""
    accumulator = EnergyAccumulator(config, rows_per_ref=rows_per_ref)
    for command in commands:
        accumulator.account(command)
    return {c: accumulator.breakdown[c] for c in COMMAND_CLASSES}
