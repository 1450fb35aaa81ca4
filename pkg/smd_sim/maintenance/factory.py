import logging

from smd_sim.config import SimConfig, section
from smd_sim.exceptions import ConfigError
from smd_sim.maintenance.calculators import drp_required_counters, vr_factor
from smd_sim.maintenance.refresh import FixedRateRefresh, VariableRefresh
from smd_sim.maintenance.rowhammer import CbfRowHammer, MisraGriesRowHammer, ProbabilisticRowHammer
from smd_sim.maintenance.scrub import MemoryScrub
from smd_sim.utils.rng import stream, stream_seed

logger = logging.getLogger(__name__)

ENGINES = {
    "fr": FixedRateRefresh,
    "vr": VariableRefresh,
    "prp": ProbabilisticRowHammer,
    "prp_plus": CbfRowHammer,
    "drp": MisraGriesRowHammer,
    "ms": MemoryScrub,
}

DIVERGENCE = ("lock-step", "common-case", "worst-case")


def mechanisms_for(mode, config=None):
    """The maintenance mechanisms an operating mode runs inside the chips."""
    cfg = section("maintenance") if config is None else config
    modes = cfg.get("modes", {}) or {}
    if mode not in modes:
        raise ConfigError(f"Unknown mode {mode!r}, expected one of {', '.join(modes)}")
    mechanisms = list(modes[mode] or [])
    unknown = [m for m in mechanisms if m not in ENGINES]
    if unknown:
        raise ConfigError(f"Unknown maintenance mechanisms {unknown} for mode {mode!r}")
    return mechanisms


def _refresh_phase(engine_cls, chip, bank, seed, divergence, rg):
    """Starting region and first boundary for refresh-paced engines of one chip."""
    if divergence == "lock-step" or chip.index == 0:
        return {}
    timing = chip.timing
    if divergence == "worst-case":
        # Spread the chips so their operations on one bank never overlap
        return {
            "start_region": chip.index,
            "first_boundary": timing.tREFI_cycles + chip.index * rg * timing.tRC,
        }
    rng = stream(seed, "divergence", engine_cls.name, chip.bank_offset + bank, chip.index)
    return {
        "start_region": int(rng.integers(chip.geometry.regions_per_bank)),
        "first_boundary": timing.tREFI_cycles + int(rng.integers(timing.tREFI_cycles)),
    }


def build_engines(mechanisms, chip, bank, config=None, seed=0, sink=None, divergence="lock-step"):
    """Create the engines of ``mechanisms`` for one bank of ``chip``.

    Parameters
    ----------
    mechanisms: list of str
        Keys of ``ENGINES``.
    config: dict
        The ``smdsim.maintenance`` section. Read from dask config when ``None``.
    seed: int
        Experiment seed, every engine draws from its own stream derived from it.
    divergence: str
        ``lock-step``, ``common-case`` or ``worst-case`` phase offsets between chips.
    """
    if divergence not in DIVERGENCE:
        raise ConfigError(f"Unknown divergence scenario {divergence!r}")
    cfg = section("maintenance") if config is None else SimConfig(config)
    timing, geometry = chip.timing, chip.geometry
    global_bank = chip.bank_offset + bank
    engines = []
    for name in mechanisms:
        if name == "fr":
            rg = cfg.get("fr.rg") or geometry.ref_rows
            engine = FixedRateRefresh(
                chip,
                bank,
                sink,
                rg=rg,
                max_pending=cfg.get("fr.max_pending", 8),
                **_refresh_phase(FixedRateRefresh, chip, bank, seed, divergence, rg),
            )
        elif name == "vr":
            rg = cfg.get("fr.rg") or geometry.ref_rows
            rng = stream(seed, "weak-rows", global_bank, chip.index)
            weak = round(cfg.get("vr.weak_fraction", 0.001) * geometry.rows_per_bank)
            weak_rows = rng.choice(geometry.rows_per_bank, size=weak, replace=False).tolist()
            engine = VariableRefresh(
                chip,
                bank,
                sink,
                weak_rows=weak_rows,
                vr_factor=vr_factor(cfg.get("vr.rt_weak_row", "128 ms"), timing.tREFW),
                start_cycle=cfg.get("vr.start_cycle", 1),
                filter_bits=cfg.get("vr.filter_bits", 8192),
                filter_hashes=cfg.get("vr.filter_hashes", 6),
                seed=stream_seed(seed, "bloom", global_bank, chip.index),
                rg=rg,
                max_pending=cfg.get("fr.max_pending", 8),
                **_refresh_phase(VariableRefresh, chip, bank, seed, divergence, rg),
            )
        elif name == "prp":
            engine = ProbabilisticRowHammer(
                chip,
                bank,
                sink,
                p_mark=cfg.get("prp.p_mark", 0.001),
                blast_distance=cfg.get("prp.blast_distance", 1),
                rng=stream(seed, "prp", global_bank, chip.index),
            )
        elif name == "prp_plus":
            engine = CbfRowHammer(
                chip,
                bank,
                sink,
                act_max=cfg.get("prp_plus.act_max", 1024),
                window=cfg.get("prp_plus.window"),
                cbf_size=cfg.get("prp_plus.cbf_size", 1024),
                cbf_hashes=cfg.get("prp_plus.cbf_hashes", 4),
                p_mark=cfg.get("prp_plus.p_mark", 0.01),
                blast_distance=cfg.get("prp.blast_distance", 1),
                rng=stream(seed, "prp-plus", global_bank, chip.index),
                seed=stream_seed(seed, "cbf", global_bank, chip.index),
            )
        elif name == "drp":
            act_max = cfg.get("drp.act_max", 512)
            counters = cfg.get("drp.counters")
            if counters is None:
                counters = drp_required_counters(timing, act_max, cfg.get("drp.act_trefw"))
            engine = MisraGriesRowHammer(
                chip,
                bank,
                sink,
                act_max=act_max,
                counters=counters,
                blast_distance=cfg.get("drp.blast_distance", 1),
            )
        elif name == "ms":
            rng = stream(seed, "scrub-errors", global_bank, chip.index)
            error_rows = round(cfg.get("ms.error_row_fraction", 0.0) * geometry.rows_per_bank)
            rows = rng.choice(geometry.rows_per_bank, size=error_rows, replace=False).tolist()
            engine = MemoryScrub(
                chip,
                bank,
                sink,
                scrub_period=cfg.get("ms.scrub_period", "5 minutes"),
                errors={row: cfg.get("ms.errors_per_row", 1) for row in rows},
                codewords=cfg.get("ms.codewords_per_row", 128),
                writeback_cycles=cfg.get("ms.error_writeback_cycles", 4),
                max_pending=cfg.get("fr.max_pending", 8),
            )
        else:
            raise ConfigError(f"Unknown maintenance mechanism {name!r}")
        engines.append(engine)
    logger.debug("Built %s for bank %d of chip %d", [e.name for e in engines], bank, chip.index)
    return engines
