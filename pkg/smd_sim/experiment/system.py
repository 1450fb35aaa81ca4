import functools
import logging
from collections import Counter

from smd_sim.chip import BaselineChip, Geometry, Rank, SmdChip
from smd_sim.controller import BASELINE_REFRESH_MODES, ControllerConfig, MemoryController
from smd_sim.energy import EnergyAccumulator, EnergyConfig, MaintenanceStats, StatsReport
from smd_sim.energy.model import CLASSES
from smd_sim.exceptions import ConfigError
from smd_sim.frontend import Core, CoreConfig, LlcModel, PageMapper
from smd_sim.maintenance import RowHammerOracle, VariableRefresh, build_engines
from smd_sim.maintenance.calculators import vr_factor
from smd_sim.timing import TimingParams, check_stream
from smd_sim.utils.logs import CommandLog, CommandLogs
from smd_sim.utils.rng import stream
from smd_sim.utils.timeout import Timeout

logger = logging.getLogger(__name__)

# Slack on the refresh interval of any row: eight postponed or pending operations plus one in flight
REFRESH_SLACK_TREFI = 17


class MemorySystem:
    """Cores, a shared LLC, memory controllers and DRAM chips for one run.

    Everything advances on the memory bus clock. Each bus cycle the in-chip
    maintenance engines that are due run first, then every controller issues
    at most one command, then the cores run the core cycles falling inside
    the bus cycle.

    Parameters
    ----------
    config: ExperimentConfig
    traces: list of list of TraceRecord
        One trace per core.
    """

    def __init__(self, config, traces):
        if not traces:
            raise ConfigError("A memory system needs at least one core trace")
        self.config = config
        self.mode = mode = config.mode
        self.seed = seed = config.seed
        self.timing = timing = TimingParams.from_config(config.section("timing"))
        geometry = Geometry.from_config(config.section("geometry"))
        regions = config.get("experiment.regions_per_bank")
        if regions:
            geometry = geometry.with_regions(regions)
        self.geometry = geometry
        self.mechanisms = mechanisms = config.mechanisms
        self.divergence = divergence = config.get("experiment.divergence", "lock-step")
        chips = 1 if divergence == "lock-step" else geometry.chips_per_rank
        baseline = mode in BASELINE_REFRESH_MODES

        energy_config = EnergyConfig.from_config(config.section("energy"))
        self.energy = {
            c: EnergyAccumulator(
                energy_config,
                rows_per_ref=geometry.ref_rows * geometry.banks_per_rank,
                chips=chips,
                clock_mhz=timing.clock_freq_mhz,
            )
            for c in range(geometry.channels)
        }
        self.stats = MaintenanceStats(geometry, self.energy, chips)

        maintenance = config.section("maintenance")
        max_locks = config.get("chip.max_locks_per_bank", 1)
        self.oracle = None
        if "drp" in mechanisms:
            self.oracle = RowHammerOracle(
                maintenance.get("drp.act_max", 512),
                timing.tREFW_cycles,
                geometry,
                blast_distance=maintenance.get("drp.blast_distance", 1),
            )
            self.stats.observers.append(self.oracle)
        self.engines = []
        self.ranks = []
        for channel in range(geometry.channels):
            ranks = []
            for r in range(geometry.ranks_per_channel):
                offset = channel * geometry.banks_per_channel + r * geometry.banks_per_rank
                if baseline:
                    devices = [BaselineChip(geometry, timing, i, offset) for i in range(chips)]
                else:
                    devices = [
                        SmdChip(geometry, timing, i, offset, max_locks_per_bank=max_locks)
                        for i in range(chips)
                    ]
                    for chip in devices:
                        for bank in range(geometry.banks_per_rank):
                            self.engines += build_engines(
                                mechanisms,
                                chip,
                                bank,
                                config=maintenance,
                                seed=seed,
                                sink=self.stats,
                                divergence=divergence,
                            )
                            if self.oracle is not None:
                                self.oracle.attach(chip, bank)
                ranks.append(Rank(devices, channel, r))
            self.ranks.append(ranks)
        for engine in self.engines:
            if isinstance(engine, VariableRefresh):
                self.stats.tracker.mark_strict(
                    engine.global_bank, engine.every_sweep_rows(), engine.chip.index
                )

        self.check_timing = config.get("experiment.check_timing", True)
        self.dump_path = config.get("experiment.dump_commands")
        self.logs = None
        if self.check_timing or self.dump_path:
            self.logs = CommandLogs({c: CommandLog() for c in range(geometry.channels)})
        controller_config = ControllerConfig.from_config(mode, timing, config.section("controller"))
        self.controllers = [
            MemoryController(
                channel,
                self.ranks[channel],
                timing,
                geometry,
                controller_config,
                energy=self.energy[channel],
                log=None if self.logs is None else self.logs[channel],
                sink=self.stats,
                rng=stream(seed, "controller", channel),
            )
            for channel in range(geometry.channels)
        ]

        frontend = config.section("frontend")
        self.core_config = CoreConfig.from_config(frontend)
        line_size = frontend.get("llc.line_size", 64)
        self.llc = LlcModel(
            frontend.get("llc.bytes_per_core", 4 << 20) * len(traces),
            frontend.get("llc.ways", 8),
            line_size,
        )
        page_size = frontend.get("page_size", 4096)
        self.mapper = PageMapper(geometry.capacity_bytes // page_size, page_size, seed)
        self.target = config.get("experiment.run_instructions", 1_000_000)
        self.cores = [
            Core(
                i,
                records,
                self.llc,
                self.mapper,
                self.send,
                self.core_config,
                target=self.target,
                bus_clock_mhz=timing.clock_freq_mhz,
            )
            for i, records in enumerate(traces)
        ]
        self.now = 0

    def __repr__(self):
        return (
            f"<MemorySystem mode={self.mode} cores={len(self.cores)} "
            f"channels={len(self.controllers)}>"
        )

    def send(self, request, now):
        channel = self.geometry.decompose(request.paddr).channel
        return self.controllers[channel].enqueue(request, now)

    def step(self, now):
        """Run the engines and controllers for bus cycle ``now``."""
        for engine in self.engines:
            if engine.wake <= now:
                engine.tick(now)
        for controller in self.controllers:
            controller.tick(now)

    def run(self):
        """Warm up, run until every core retired its target and return a ``StatsReport``."""
        warmup = self.config.get("experiment.warmup_instructions", 0)
        for core in self.cores:
            core.warm(warmup)
        logger.info(
            "Running %s mode=%s seed=%d cores=%d",
            self.config.get("experiment.name"),
            self.mode,
            self.seed,
            len(self.cores),
        )
        timeout = Timeout(
            self.config.get("experiment.timeout"),
            f"Simulation of mode {self.mode} did not finish in time",
            max_cycles=self.config.get("experiment.max_cycles"),
        )
        core_mhz = self.core_config.core_clock_mhz
        bus_mhz = self.timing.clock_freq_mhz
        cores = self.cores
        now = core_now = 0
        while timeout.run(now):
            self.step(now)
            end = (now + 1) * core_mhz // bus_mhz
            while core_now < end:
                for core in cores:
                    core.tick(core_now, now)
                core_now += 1
            now += 1
            if all(core.done for core in cores):
                break
        finished = now
        now = self._drain(now)
        self.now = now
        report = self.report(finished)
        logger.info(
            "Finished %s mode=%s after %d cycles, IPC %s",
            self.config.get("experiment.name"),
            self.mode,
            finished,
            " ".join(f"{ipc:.3f}" for ipc in report.ipc),
        )
        return report

    def _drain(self, now):
        limit = now + self.config.get("experiment.drain_cycles", 100_000)
        while now < limit:
            if all(c.idle for c in self.controllers) and not any(core.mshr for core in self.cores):
                return now
            self.step(now)
            now += 1
        logger.warning("Requests still in flight %d cycles after the last core finished", limit)
        return now

    def refresh_bound(self, weak=False):
        """Longest acceptable interval between refreshes of a row, ``None`` if rows are never refreshed.

        With ``weak``, the bound for the rows variable refresh visits on every
        sweep.
        """
        timing = self.timing
        slack = REFRESH_SLACK_TREFI * timing.tREFI_cycles
        if "vr" in self.mechanisms and not weak:
            factor = vr_factor(self.config.get("maintenance.vr.rt_weak_row", "128 ms"), timing.tREFW)
            return factor * timing.tREFW_cycles + slack
        if {"fr", "vr"} & set(self.mechanisms) or self.mode in BASELINE_REFRESH_MODES:
            return timing.tREFW_cycles + slack
        return None

    def faults(self):
        faults = []
        if self.logs is not None and self.check_timing:
            for violation in check_stream(self.logs.merged(), self.timing):
                faults.append(f"timing: {violation}")
        bound = self.refresh_bound()
        gap = self.stats.tracker.max_gap_at(self.now)
        if bound is not None and gap > bound:
            faults.append(f"refresh: a row went {gap} cycles without refresh, more than {bound}")
        if "vr" in self.mechanisms:
            bound = self.refresh_bound(weak=True)
            gap = self.stats.tracker.max_strict_gap_at(self.now)
            if gap > bound:
                faults.append(f"refresh: a weak row went {gap} cycles without refresh, more than {bound}")
        if self.oracle is not None:
            faults += [f"rowhammer: {miss}" for miss in self.oracle.misses]
            if self.oracle.miss_count > len(self.oracle.misses):
                faults.append(f"rowhammer: {self.oracle.miss_count} misses in total")
        for fault in faults[:10]:
            logger.error(fault)
        return faults

    def report(self, cycles):
        for channel, controller in enumerate(self.controllers):
            for active, idle in controller.background_cycles(self.now):
                self.energy[channel].add_background(active, idle)
        energy = functools.reduce(lambda a, b: a.merge(b), self.energy.values())
        commands = Counter()
        for controller in self.controllers:
            commands.update(controller.counts)
        if self.dump_path:
            self.logs.write(self.dump_path)
            logger.info("Wrote command log to %s", self.dump_path)
        stats = self.stats
        return StatsReport(
            experiment=self.config.get("experiment.name", "smdsim"),
            mode=self.mode,
            seed=self.seed,
            cycles=cycles,
            ipc=[core.ipc for core in self.cores],
            mpki=[1000 * core.requests / max(core.retired, 1) for core in self.cores],
            energy={c: energy.breakdown[c] for c in CLASSES},
            commands=dict(commands),
            maintenance_rows=dict(stats.rows),
            maintenance_ops=dict(stats.ops),
            region_unavailability=stats.unavailability(self.now),
            max_refresh_gap=stats.tracker.max_gap_at(self.now),
            faults=self.faults(),
        )
