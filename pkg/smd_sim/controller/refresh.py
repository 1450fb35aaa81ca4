import logging
from collections import deque
from dataclasses import replace

from smd_sim.config import duration_ns
from smd_sim.controller.request import MemRequest, RequestKind
from smd_sim.exceptions import InvariantViolation
from smd_sim.maintenance.calculators import neighbors
from smd_sim.timing.params import ns_to_cycles

logger = logging.getLogger(__name__)


class BaselineRefresh:
    """DDR4 all-bank refresh bookkeeping for the ranks of one channel.

    One REF falls due per rank at every tREFI boundary. Due REFs are issued
    while the rank has no queued requests and postponed otherwise, until
    ``max_postponed`` are owed and the rank must be drained and refreshed.
    """

    def __init__(self, ranks, timing, max_postponed=8):
        self.interval = timing.tREFI_cycles
        self.max_postponed = max_postponed
        self.next_boundary = self.interval
        self.backlog = [0] * ranks
        self.draining = [False] * ranks
        self.issued = 0
        self.max_backlog = 0

    def tick(self, now, busy):
        """Advance to ``now``, returning whether any rank's drain state changed.

        ``busy(rank)`` tells whether requests are queued for the rank.
        """
        changed = False
        while now >= self.next_boundary:
            for rank, owed in enumerate(self.backlog):
                if owed >= self.max_postponed:
                    raise InvariantViolation(
                        f"Rank {rank} would owe more than {self.max_postponed} REF commands"
                    )
                self.backlog[rank] = owed + 1
                self.max_backlog = max(self.max_backlog, owed + 1)
            self.next_boundary += self.interval
            changed = True
        for rank, owed in enumerate(self.backlog):
            want = owed > 0 and (owed >= self.max_postponed or not busy(rank))
            if want != self.draining[rank]:
                self.draining[rank] = want
                changed = True
        return changed

    def on_ref(self, rank):
        self.backlog[rank] -= 1
        self.issued += 1
        self.draining[rank] = False


class ControllerPara:
    """PARA in the controller: closing a row refreshes its neighbours with probability ``p_mark``."""

    def __init__(self, p_mark, blast_distance, geometry, rng):
        self.p_mark = p_mark
        self.blast_distance = blast_distance
        self.geometry = geometry
        self.rng = rng
        self.marks = 0

    def on_close(self, row):
        if self.p_mark and self.rng.random() < self.p_mark:
            self.marks += 1
            return neighbors(row, self.blast_distance, self.geometry)
        return []


class ControllerScrub:
    """Patrol scrubbing by the controller, reading every line of a row in each bank in turn."""

    def __init__(self, period, geometry, timing, channel=0):
        self.geometry = geometry
        self.channel = channel
        self.interval = max(1, ns_to_cycles(duration_ns(period) / geometry.rows_per_bank, timing))
        self.next_due = self.interval
        self.row = 0
        self.rows_scrubbed = 0
        self.backlog = deque()

    def tick(self, now):
        while now >= self.next_due:
            for bank in range(self.geometry.banks_per_channel):
                address = self.geometry.locate(
                    self.geometry.bank_address(self.channel, bank), self.row
                )
                for column in range(self.geometry.columns_per_row):
                    paddr = self.geometry.compose(replace(address, column=column))
                    self.backlog.append(MemRequest(RequestKind.READ, paddr, internal=True))
                self.rows_scrubbed += 1
            self.row = (self.row + 1) % self.geometry.rows_per_bank
            self.next_due += self.interval
        return self.backlog
