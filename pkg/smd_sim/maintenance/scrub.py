from smd_sim.config import duration_ns
from smd_sim.maintenance.base import MaintenanceJob
from smd_sim.maintenance.calculators import scrub_row_cycles
from smd_sim.maintenance.refresh import FixedRateRefresh
from smd_sim.timing.params import ns_to_cycles


class MemoryScrub(FixedRateRefresh):
    """Patrol scrubbing inside the chip.

    Visits one row every ``scrub_period / rows_per_bank`` using the same region
    and row counters as fixed-rate refresh. Reading a row checks every codeword
    and writes back the ones holding correctable errors.

    Parameters
    ----------
    scrub_period: str or float
        Time to scrub every row of the bank once.
    errors: dict
        Row to number of erroneous codewords. Scrubbing a row corrects them.
    """

    name = "smd-ms"
    kind = "scrub"

    def __init__(
        self,
        chip,
        bank,
        sink=None,
        scrub_period="5 minutes",
        errors=None,
        codewords=128,
        writeback_cycles=4,
        max_pending=8,
        first_boundary=None,
    ):
        geometry = chip.geometry
        interval = max(1, ns_to_cycles(duration_ns(scrub_period) / geometry.rows_per_bank, chip.timing))
        super().__init__(
            chip,
            bank,
            sink,
            rg=1,
            max_pending=max_pending,
            first_boundary=first_boundary,
            interval=interval,
        )
        self.errors = dict(errors or {})
        self.codewords = codewords
        self.writeback_cycles = writeback_cycles
        self.corrected = 0

    def make_job(self, rows):
        (row,) = rows
        errors = self.errors.get(row, 0)
        cycles = scrub_row_cycles(self.timing, errors, self.codewords, self.writeback_cycles)
        return MaintenanceJob(
            self.lock_region_ctr,
            rows,
            cycles,
            kind=self.kind,
            codewords=self.codewords,
            errors=errors,
        )

    def complete(self, job, now):
        self.corrected += self.errors.pop(job.rows[0], 0)
        super().complete(job, now)
