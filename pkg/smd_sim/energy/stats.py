import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)


class RefreshTracker:
    """Last refresh time of every row of every bank of every chip, and the largest gap seen.

    Rows marked strict also have their largest gap kept on its own, so they
    can be held to a tighter bound than the rest.
    """

    def __init__(self, banks, rows_per_bank, start=0, chips=1):
        self.last = np.full((chips, banks, rows_per_bank), start, dtype=np.int64)
        self.strict = np.zeros(self.last.shape, dtype=bool)
        self.start = start
        self.max_gap = 0
        self.max_strict_gap = 0
        self.refreshes = 0

    def record(self, bank, row, time, chip=0):
        key = (chip, bank, row)
        gap = time - int(self.last[key])
        if gap > self.max_gap:
            self.max_gap = gap
        if gap > self.max_strict_gap and self.strict[key]:
            self.max_strict_gap = gap
        self.last[key] = time
        self.refreshes += 1

    def mark_strict(self, bank, rows, chip=0):
        self.strict[chip, bank, np.asarray(list(rows), dtype=np.intp)] = True

    def max_gap_at(self, now):
        """Largest gap including rows still waiting for their next refresh at ``now``."""
        return max(self.max_gap, now - int(self.last.min()))

    def max_strict_gap_at(self, now):
        if not self.strict.any():
            return self.max_strict_gap
        return max(self.max_strict_gap, now - int(self.last[self.strict].min()))

    def never_refreshed(self):
        return int((self.last == self.start).sum())


class MaintenanceStats:
    """A maintenance event sink feeding the refresh tracker, energy and counters.

    Parameters
    ----------
    geometry: smd_sim.chip.Geometry
    energy: dict
        ``EnergyAccumulator`` per channel, events go to the channel of their bank.
    chips: int
        Chips per rank that report events, each one is tracked on its own.
    """

    def __init__(self, geometry, energy=None, chips=1, start=0):
        self.geometry = geometry
        self.energy = energy or {}
        self.chips = chips
        self.tracker = RefreshTracker(geometry.total_banks, geometry.rows_per_bank, start, chips)
        self.rows = Counter()
        self.ops = Counter()
        self.locked_cycles = Counter()
        self.codewords = 0
        self.errors_corrected = 0
        # Also sent every batch of events
        self.observers = []

    def record(self, events):
        per_channel = self.geometry.banks_per_channel
        for event in events:
            self.rows[event.source] += 1
            energy = self.energy.get(event.bank // per_channel)
            if energy is not None:
                energy.account(event)
            if event.kind == "scrub":
                self.codewords += event.codewords
                self.errors_corrected += event.errors
            else:
                self.tracker.record(event.bank, event.row, event.time, event.chip)
        for observer in self.observers:
            observer.record(events)

    def locked(self, source, chip, bank, region, start, end):
        self.ops[source] += 1
        self.locked_cycles[source] += end - start

    def unavailability(self, cycles):
        """Fraction of region-cycles each mechanism held locked."""
        if cycles <= 0:
            return {}
        total = cycles * self.geometry.total_banks * self.geometry.regions_per_bank * self.chips
        return {source: locked / total for source, locked in sorted(self.locked_cycles.items())}


def weighted_speedup(ipc, ipc_alone):
    """Sum over cores of shared IPC over alone IPC."""
    if len(ipc) != len(ipc_alone):
        raise ValueError(f"Got {len(ipc)} shared IPCs but {len(ipc_alone)} alone IPCs")
    if not ipc or any(v <= 0 for v in ipc) or any(v <= 0 for v in ipc_alone):
        raise ValueError("IPCs must be positive")
    return math.fsum(s / a for s, a in zip(ipc, ipc_alone))


@dataclass
class StatsReport:
    """Results of one simulation run."""

    experiment: str
    mode: str
    seed: int
    cycles: int
    ipc: list
    ipc_alone: Optional[list] = None
    mpki: list = field(default_factory=list)
    energy: dict = field(default_factory=dict)
    commands: dict = field(default_factory=dict)
    maintenance_rows: dict = field(default_factory=dict)
    maintenance_ops: dict = field(default_factory=dict)
    region_unavailability: dict = field(default_factory=dict)
    max_refresh_gap: int = 0
    faults: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    @property
    def energy_total(self):
        return sum(self.energy.values())

    @property
    def weighted_speedup(self):
        if self.ipc_alone is None:
            return None
        return weighted_speedup(self.ipc, self.ipc_alone)

    @property
    def throughput(self):
        """Weighted speedup for multi-core runs with alone IPCs, total IPC otherwise."""
        ws = self.weighted_speedup
        return math.fsum(self.ipc) if ws is None else ws

    @property
    def ok(self):
        return not self.faults

    def metrics(self):
        """``(metric, value)`` pairs in a fixed order."""
        rows = [("cycles", self.cycles)]
        rows += [(f"ipc.core{i}", v) for i, v in enumerate(self.ipc)]
        if self.ipc_alone is not None:
            rows += [(f"ipc_alone.core{i}", v) for i, v in enumerate(self.ipc_alone)]
            rows.append(("weighted_speedup", self.weighted_speedup))
        rows += [(f"mpki.core{i}", v) for i, v in enumerate(self.mpki)]
        rows.append(("energy_pj.total", self.energy_total))
        rows += [(f"energy_pj.{k}", v) for k, v in self.energy.items()]
        rows += [(f"commands.{k}", v) for k, v in sorted(self.commands.items())]
        rows += [(f"maintenance_rows.{k}", v) for k, v in sorted(self.maintenance_rows.items())]
        rows += [(f"maintenance_ops.{k}", v) for k, v in sorted(self.maintenance_ops.items())]
        rows += [
            (f"region_unavailability.{k}", v) for k, v in sorted(self.region_unavailability.items())
        ]
        rows.append(("max_refresh_gap_cycles", self.max_refresh_gap))
        rows.append(("faults", len(self.faults)))
        return rows


def speedup(report, baseline):
    """Relative throughput of ``report`` over ``baseline``, 0.0 meaning equal."""
    return report.throughput / baseline.throughput - 1
