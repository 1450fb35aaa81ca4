import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

from smd_sim.chip.lock import LockResult
from smd_sim.exceptions import ConfigError

logger = logging.getLogger(__name__)


class MaintenanceEvent(NamedTuple):
    """One row a maintenance engine refreshed or scrubbed."""

    source: str
    kind: str
    chip: int
    bank: int
    region: int
    row: int
    time: int
    codewords: int = 0
    errors: int = 0


@dataclass
class MaintenanceJob:
    """Work done under a single region lock."""

    region: int
    rows: list
    row_cycles: int
    kind: str = "refresh"
    codewords: int = 0
    errors: int = 0
    start: int = None
    end: int = None
    extra: dict = field(default_factory=dict)

    @property
    def cycles(self):
        return self.row_cycles * len(self.rows)


class EventLog(list):
    """A sink keeping every maintenance event and region lock it is sent."""

    def __init__(self):
        super().__init__()
        self.locks = []

    def record(self, events):
        self.extend(events)

    def locked(self, source, chip, bank, region, start, end):
        self.locks.append((source, chip, bank, region, start, end))


class MaintenanceEngine:
    """Base class for the autonomous maintenance engines of an SMD chip.

    One engine serves one bank of one chip. Each unit of work is a
    ``MaintenanceJob``: the engine locks the job's region, works on its rows,
    then releases the lock. Subclasses set ``name`` and override the hooks
    ``propose``, ``complete``, ``advance``, ``next_timer`` and ``on_act``.

    The engine is driven by calling ``tick(now)`` whenever ``now >= wake``.

    Parameters
    ----------
    chip: smd_sim.chip.SmdChip
        The chip the engine belongs to.
    bank: int
        Bank index within the chip's rank.
    sink: object
        Receives ``record(events)`` and ``locked(...)`` calls. Defaults to an ``EventLog``.
    """

    name = None

    def __init__(self, chip, bank, sink=None):
        if not chip.autonomous:
            raise ConfigError(f"{self.name} needs an SMD chip, got {chip!r}")
        self.chip = chip
        self.bank = bank
        self.timing = chip.timing
        self.geometry = chip.geometry
        self.sink = EventLog() if sink is None else sink
        self.job = None
        self.staged = None
        self.wake = 0
        self.ops = 0
        self.lock_failures = 0
        self.last_lock_result = None
        chip.listeners[bank].append(self)

    def __repr__(self):
        return f"<{type(self).__name__} chip={self.chip.index} bank={self.bank}>"

    @property
    def global_bank(self):
        return self.chip.bank_offset + self.bank

    def advance(self, now):
        """Fire any timers that have expired by ``now``."""

    def next_timer(self):
        return math.inf

    def propose(self, now):
        """Return the next ``MaintenanceJob`` or ``None`` when there is no work."""
        return None

    def complete(self, job, now):
        """Called once the lock of ``job`` has been released."""

    def on_act(self, row, now):
        """Called for every ACT the chip accepts in this bank."""

    def tick(self, now):
        """Run the engine for cycle ``now`` and return the events of any job started."""
        self.advance(now)
        events = []
        if self.job is not None:
            if now < self.job.end:
                self.wake = min(self.job.end, self.next_timer())
                return events
            self._finish(now)
        events = self.step(now)
        if self.job is not None:
            self.wake = min(self.job.end, self.next_timer())
        elif self.staged is not None:
            self.wake = now + 1
        else:
            self.wake = self.next_timer()
        return events

    def step(self, now):
        if self.staged is None:
            self.staged = self.propose(now)
            if self.staged is None:
                return []
        job = self.staged
        result = self.chip.try_lock(self.bank, job.region, self.name, now)
        self.last_lock_result = result
        if result is not LockResult.LOCKED:
            self.lock_failures += 1
            return []
        self.staged = None
        job.start = now
        job.end = now + job.cycles
        self.job = job
        self.chip.latch(self.bank, job.region, job.rows[0])
        events = [
            MaintenanceEvent(
                self.name,
                job.kind,
                self.chip.index,
                self.global_bank,
                job.region,
                row,
                now + (i + 1) * job.row_cycles,
                job.codewords,
                job.errors,
            )
            for i, row in enumerate(job.rows)
        ]
        self.sink.locked(
            self.name, self.chip.index, self.global_bank, job.region, job.start, job.end
        )
        self.sink.record(events)
        return events

    def _finish(self, now):
        job = self.job
        self.chip.release(self.bank, job.region, self.name, now)
        self.job = None
        self.ops += 1
        self.complete(job, now)

    def request_wake(self, now):
        self.wake = min(self.wake, now + 1)
