import logging

from smd_sim.exceptions import ConfigError, InvariantViolation
from smd_sim.maintenance.base import MaintenanceEngine, MaintenanceJob
from smd_sim.maintenance.bloom import BloomFilter

logger = logging.getLogger(__name__)


class FixedRateRefresh(MaintenanceEngine):
    """Refreshes every row of a bank once per refresh window.

    A pending refresh is added at every ``interval`` boundary (tREFI by
    default) and each one is served by locking region ``lock_region_ctr`` and
    refreshing ``rg`` rows starting at ``row_addr_ctr * rg`` inside it. The
    region counter advances after every operation and the row counter
    advances each time the region counter wraps, so consecutive operations
    hit different regions.

    Parameters
    ----------
    rg: int
        Rows refreshed per lock. Defaults to the geometry's rows per REF.
    max_pending: int
        A boundary that finds this many refreshes already pending is a fault.
    start_region: int
        Initial value of the region counter.
    first_boundary: int
        Cycle of the first boundary. Defaults to one interval in.
    interval: int
        Cycles between boundaries. Defaults to tREFI.
    """

    name = "smd-fr"
    kind = "refresh"

    def __init__(
        self,
        chip,
        bank,
        sink=None,
        rg=None,
        max_pending=8,
        start_region=0,
        first_boundary=None,
        interval=None,
    ):
        super().__init__(chip, bank, sink)
        g = self.geometry
        self.rg = g.ref_rows if rg is None else rg
        if self.rg < 1 or g.rows_per_region % self.rg:
            raise ConfigError(
                f"{self.rg} rows per refresh do not evenly divide a {g.rows_per_region} row region"
            )
        if interval is None:
            interval = self.timing.tREFI_cycles
            if self.rg * self.timing.refs_per_window < g.rows_per_bank:
                raise ConfigError(
                    f"Refreshing {self.rg} rows per tREFI cannot cover {g.rows_per_bank} rows "
                    f"in {self.timing.refs_per_window} intervals"
                )
        self.interval = interval
        self.max_pending = max_pending
        self.slots = g.rows_per_region // self.rg
        self.pending = 0
        self.lock_region_ctr = start_region % g.regions_per_bank
        self.row_addr_ctr = 0
        self.sweeps = 0
        self.next_boundary = self.interval if first_boundary is None else first_boundary

    def on_trefi(self):
        if self.pending >= self.max_pending:
            raise InvariantViolation(
                f"{self.name} on chip {self.chip.index} bank {self.bank} would exceed "
                f"{self.max_pending} pending operations"
            )
        self.pending += 1

    def advance(self, now):
        while now >= self.next_boundary:
            self.on_trefi()
            self.next_boundary += self.interval

    def next_timer(self):
        return self.next_boundary

    def target_rows(self):
        first = self.lock_region_ctr * self.geometry.rows_per_region + self.row_addr_ctr * self.rg
        return range(first, first + self.rg)

    def select_rows(self, rows):
        return list(rows)

    def make_job(self, rows):
        return MaintenanceJob(self.lock_region_ctr, rows, self.timing.tRC, kind=self.kind)

    def propose(self, now):
        while self.pending:
            rows = self.select_rows(self.target_rows())
            if rows:
                return self.make_job(rows)
            self.advance_counters()
        return None

    def complete(self, job, now):
        self.advance_counters()

    def advance_counters(self):
        self.pending -= 1
        self.lock_region_ctr += 1
        if self.lock_region_ctr == self.geometry.regions_per_bank:
            self.lock_region_ctr = 0
            self.row_addr_ctr += 1
            if self.row_addr_ctr == self.slots:
                self.row_addr_ctr = 0
                self.sweeps += 1
                self.on_sweep()

    def on_sweep(self):
        """Called when every row of the bank has been visited once more."""


class VariableRefresh(FixedRateRefresh):
    """Fixed-rate refresh that skips strong rows most of the time.

    Weak rows are kept in a Bloom filter and refreshed on every sweep. Every
    other row is refreshed only on sweeps where the refresh cycle counter is a
    multiple of ``vr_factor``. Steps whose rows all get skipped take no lock.
    """

    name = "smd-vr"

    def __init__(
        self,
        chip,
        bank,
        sink=None,
        weak_rows=(),
        vr_factor=4,
        start_cycle=1,
        filter_bits=8192,
        filter_hashes=6,
        seed=0,
        **kwargs,
    ):
        super().__init__(chip, bank, sink, **kwargs)
        if vr_factor < 1:
            raise ConfigError("vr_factor must be at least 1")
        self.vr_factor = vr_factor
        self.refresh_cycle_ctr = start_cycle
        self.filter = BloomFilter(filter_bits, filter_hashes, seed=seed)
        self.weak_rows = sorted(set(weak_rows))
        for row in self.weak_rows:
            self.filter.add(row)
        self.skipped_rows = 0

    @property
    def full_sweep(self):
        return self.refresh_cycle_ctr % self.vr_factor == 0

    def should_refresh(self, row):
        return self.full_sweep or self.filter.test(row)

    def every_sweep_rows(self):
        """Rows the filter reports as weak, including its false positives."""
        return [row for row in range(self.geometry.rows_per_bank) if self.filter.test(row)]

    def select_rows(self, rows):
        if self.full_sweep:
            return list(rows)
        selected = [r for r in rows if self.filter.test(r)]
        self.skipped_rows += len(rows) - len(selected)
        return selected

    def on_sweep(self):
        self.refresh_cycle_ctr += 1
