import itertools
import logging
from collections import Counter, deque

import numpy as np

from smd_sim.config import duration_ns
from smd_sim.maintenance.base import MaintenanceEngine, MaintenanceJob
from smd_sim.maintenance.bloom import CountingBloomFilter
from smd_sim.maintenance.calculators import drp_required_counters, neighbors
from smd_sim.maintenance.misra_gries import CounterTable
from smd_sim.timing.params import ns_to_cycles

logger = logging.getLogger(__name__)


class VictimRefreshEngine(MaintenanceEngine):
    """Refreshes the rows around aggressor rows.

    Victims of one aggressor can span two regions at a region boundary. They
    are refreshed one region at a time, each under its own lock. Subclasses
    decide which aggressors need attention through ``next_aggressor`` and
    ``aggressor_done``.
    """

    def __init__(self, chip, bank, sink=None, blast_distance=1):
        super().__init__(chip, bank, sink)
        self.blast_distance = blast_distance
        self._groups = deque()
        self._aggressor = None
        self.victims_refreshed = 0

    def next_aggressor(self):
        raise NotImplementedError()

    def aggressor_done(self, row):
        raise NotImplementedError()

    def victim_groups(self, row):
        victims = neighbors(row, self.blast_distance, self.geometry)
        return [
            (region, list(rows))
            for region, rows in itertools.groupby(victims, key=self.geometry.region_of)
        ]

    def propose(self, now):
        while not self._groups:
            row = self.next_aggressor()
            if row is None:
                return None
            groups = self.victim_groups(row)
            if not groups:
                self.aggressor_done(row)
                continue
            self._aggressor = row
            self._groups.extend(groups)
        region, rows = self._groups[0]
        return MaintenanceJob(region, rows, self.timing.tRC)

    def complete(self, job, now):
        self._groups.popleft()
        self.victims_refreshed += len(job.rows)
        if not self._groups:
            row, self._aggressor = self._aggressor, None
            self.aggressor_done(row)


class ProbabilisticRowHammer(VictimRefreshEngine):
    """Marks an activated row with probability ``p_mark`` and refreshes its neighbours.

    Each region has one entry in the marked row table, a newer mark in the same
    region replaces the older one. A mark is cleared once its victims have been
    refreshed unless it was replaced meanwhile.
    """

    name = "smd-prp"

    def __init__(self, chip, bank, sink=None, p_mark=0.001, blast_distance=1, rng=None):
        super().__init__(chip, bank, sink, blast_distance=blast_distance)
        if not 0 <= p_mark <= 1:
            raise ValueError(f"p_mark must be a probability, got {p_mark}")
        self.p_mark = p_mark
        self.rng = np.random.default_rng(0) if rng is None else rng
        self.mrt = [None] * self.geometry.regions_per_bank
        self.marks = 0

    def on_act(self, row, now):
        if self.p_mark and self.rng.random() < self.p_mark:
            self.mark(row, now)

    def mark(self, row, now):
        region, offset = divmod(row, self.geometry.rows_per_region)
        self.mrt[region] = offset
        self.marks += 1
        self.request_wake(now)

    def marked_rows(self):
        rows_per_region = self.geometry.rows_per_region
        return [
            region * rows_per_region + offset
            for region, offset in enumerate(self.mrt)
            if offset is not None
        ]

    def next_aggressor(self):
        marked = self.marked_rows()
        return marked[0] if marked else None

    def aggressor_done(self, row):
        region, offset = divmod(row, self.geometry.rows_per_region)
        if self.mrt[region] == offset:
            self.mrt[region] = None


class CbfRowHammer(ProbabilisticRowHammer):
    """Probabilistic marking restricted to rows activated more than ``act_max`` times.

    Activations are counted in two counting Bloom filters that take turns. Every
    half window the filter with the longer history is cleared and the other one
    becomes the one consulted, so the consulted filter always covers at least
    half a window.
    """

    name = "smd-prp-plus"

    def __init__(
        self,
        chip,
        bank,
        sink=None,
        act_max=1024,
        window=None,
        cbf_size=1024,
        cbf_hashes=4,
        p_mark=0.01,
        blast_distance=1,
        rng=None,
        seed=0,
    ):
        super().__init__(chip, bank, sink, p_mark=p_mark, blast_distance=blast_distance, rng=rng)
        self.act_max = act_max
        window_ns = self.timing.tREFW if window is None else duration_ns(window)
        self.half_window = max(1, ns_to_cycles(window_ns / 2, self.timing))
        self.filters = (
            CountingBloomFilter(cbf_size, cbf_hashes, seed=seed),
            CountingBloomFilter(cbf_size, cbf_hashes, seed=seed),
        )
        self.active = 0
        self.next_swap = self.half_window

    def swap(self):
        self.filters[self.active].clear()
        self.active ^= 1

    def advance(self, now):
        while now >= self.next_swap:
            self.swap()
            self.next_swap += self.half_window

    def next_timer(self):
        return self.next_swap

    def estimate(self, row):
        return self.filters[self.active].estimate(row)

    def on_act(self, row, now):
        for f in self.filters:
            f.add(row)
        if self.estimate(row) > self.act_max:
            super().on_act(row, now)


class MisraGriesRowHammer(VictimRefreshEngine):
    """Deterministic protection with a per-bank Misra-Gries counter table.

    Neighbours of a row are refreshed every time its counter passes another
    multiple of ``act_max``. A row re-inserted after eviction starts from the
    spillover count, so its counter can jump over a multiple, which still
    triggers. The table is cleared once per refresh window.
    """

    name = "smd-drp"

    def __init__(self, chip, bank, sink=None, act_max=512, counters=None, blast_distance=1):
        super().__init__(chip, bank, sink, blast_distance=blast_distance)
        self.act_max = act_max
        if counters is None:
            counters = drp_required_counters(self.timing, act_max)
        self.table = CounterTable(counters)
        self.reset_period = self.timing.tREFW_cycles
        self.next_reset = self.reset_period
        self.triggers = deque()
        self.trigger_count = 0
        # Multiples of act_max each row has triggered at since the last reset
        self.levels = {}

    def on_act(self, row, now):
        count = self.table.record(row)
        if count is None:
            return
        level = count // self.act_max
        if level > self.levels.get(row, 0):
            self.levels[row] = level
            self.triggers.append(row)
            self.trigger_count += 1
            self.request_wake(now)

    def advance(self, now):
        while now >= self.next_reset:
            self.table.reset()
            self.levels.clear()
            self.next_reset += self.reset_period

    def next_timer(self):
        return self.next_reset

    def next_aggressor(self):
        return self.triggers[0] if self.triggers else None

    def aggressor_done(self, row):
        self.triggers.popleft()


class _BankTap:
    """Chip listener forwarding one bank's ACTs to an oracle."""

    __slots__ = ("oracle", "chip", "bank")

    def __init__(self, oracle, chip, bank):
        self.oracle = oracle
        self.chip = chip
        self.bank = bank

    def on_act(self, row, now):
        self.oracle.activated(self.chip, self.bank, row, now)


class RowHammerOracle:
    """Exact activation counts checked against the refreshes that actually happened.

    Every accepted ACT is counted per ``(chip, bank, row)`` and the counts
    restart every ``window`` cycles, in step with the counter tables. When a
    row's count reaches ``j * act_max`` for ``j >= 2``, each of its neighbours
    must have been refreshed since the count reached ``(j - 2) * act_max``
    (the window start for ``j == 2``). A correct engine triggers in between
    and its victim refresh lands within the next ``act_max`` activations.

    Feed it ACTs through ``attach`` and refresh events through ``record``.
    """

    def __init__(self, act_max, window, geometry, blast_distance=1, keep=100):
        if act_max < 1:
            raise ValueError("act_max must be positive")
        self.act_max = act_max
        self.window = window
        self.geometry = geometry
        self.blast_distance = blast_distance
        self.keep = keep
        self.counts = Counter()
        self.marks = {}
        self.last_refresh = {}
        self.checks = 0
        self.miss_count = 0
        self.misses = []

    def attach(self, chip, bank):
        chip.listeners[bank].append(_BankTap(self, chip.index, chip.bank_offset + bank))

    def record(self, events):
        for event in events:
            if event.kind != "scrub":
                self.last_refresh[(event.chip, event.bank, event.row)] = event.time

    def activated(self, chip, bank, row, now):
        key = (chip, bank, row)
        start = now - now % self.window
        marks = self.marks.get(key)
        if marks is None or marks[-1] < start:
            marks = self.marks[key] = deque([start], maxlen=2)
            self.counts[key] = 0
        self.counts[key] += 1
        count = self.counts[key]
        if count % self.act_max:
            return
        if len(marks) == 2:
            self.check(chip, bank, row, count, marks[0], now)
        marks.append(now)

    def check(self, chip, bank, row, count, since, now):
        self.checks += 1
        for victim in neighbors(row, self.blast_distance, self.geometry):
            refreshed = self.last_refresh.get((chip, bank, victim))
            if refreshed is None or refreshed < since:
                self.miss_count += 1
                if len(self.misses) < self.keep:
                    self.misses.append(
                        f"chip {chip} bank {bank} row {row} reached {count} activations at cycle "
                        f"{now} but row {victim} was not refreshed since cycle {since}"
                    )
                return
