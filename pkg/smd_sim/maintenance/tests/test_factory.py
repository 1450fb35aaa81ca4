import pytest

from smd_sim.chip import BaselineChip, Geometry, SmdChip
from smd_sim.exceptions import ConfigError
from smd_sim.maintenance import (
    ENGINES,
    CbfRowHammer,
    FixedRateRefresh,
    MemoryScrub,
    MisraGriesRowHammer,
    ProbabilisticRowHammer,
    VariableRefresh,
    build_engines,
    mechanisms_for,
)
from smd_sim.timing import TimingParams


def make_chip(index=0, bank_offset=0):
    return SmdChip(Geometry(), TimingParams(), index=index, bank_offset=bank_offset)


@pytest.mark.parametrize(
    "mode, mechanisms",
    [
        ("ddr4", []),
        ("norefresh", []),
        ("smd-fr", ["fr"]),
        ("smd-vr", ["vr"]),
        ("smd-drp", ["fr", "drp"]),
        ("smd-prp-plus", ["fr", "prp_plus"]),
        ("combined", ["vr", "prp", "ms"]),
    ],
)
def test_mechanisms_for(mode, mechanisms):
    assert mechanisms_for(mode) == mechanisms


def test_mechanisms_for_unknown():
    with pytest.raises(ConfigError):
        mechanisms_for("smd-magic")
    with pytest.raises(ConfigError):
        mechanisms_for("odd", {"modes": {"odd": ["fr", "teleport"]}})


def test_build_every_engine():
    chip = make_chip()
    engines = build_engines(list(ENGINES), chip, 0)
    assert [type(e) for e in engines] == [
        FixedRateRefresh,
        VariableRefresh,
        ProbabilisticRowHammer,
        CbfRowHammer,
        MisraGriesRowHammer,
        MemoryScrub,
    ]
    fr, vr, _, prp_plus, drp, ms = engines
    assert fr.rg == 16
    assert vr.vr_factor == 4
    assert len(vr.weak_rows) == 8
    assert prp_plus.act_max == 1024
    assert drp.table.size == 1250
    assert ms.errors == {}
    assert all(e in chip.listeners[0] for e in engines)


def test_build_from_section():
    cfg = {"drp": {"act_max": 256}, "fr": {"rg": 32}}
    fr, drp = build_engines(["fr", "drp"], make_chip(), 0, config=cfg)
    assert fr.rg == 32
    assert drp.table.size == 2500


def test_build_rejects():
    with pytest.raises(ConfigError):
        build_engines(["teleport"], make_chip(), 0)
    with pytest.raises(ConfigError):
        build_engines(["fr"], make_chip(), 0, divergence="random")
    with pytest.raises(ConfigError):
        build_engines(["fr"], BaselineChip(Geometry(), TimingParams()), 0)


def test_lock_step_chips_share_phase():
    (engine,) = build_engines(["fr"], make_chip(index=3), 0, divergence="lock-step")
    assert engine.lock_region_ctr == 0
    assert engine.next_boundary == TimingParams().tREFI_cycles


def test_worst_case_divergence():
    timing = TimingParams()
    (engine,) = build_engines(["fr"], make_chip(index=2), 0, divergence="worst-case")
    assert engine.lock_region_ctr == 2
    assert engine.next_boundary == timing.tREFI_cycles + 2 * 16 * timing.tRC


def test_common_case_divergence_is_seeded():
    def phase(seed, bank):
        (engine,) = build_engines(["fr"], make_chip(index=1), bank, seed=seed, divergence="common-case")
        return engine.lock_region_ctr, engine.next_boundary

    assert phase(5, 0) == phase(5, 0)
    first = TimingParams().tREFI_cycles
    region, boundary = phase(5, 0)
    assert 0 <= region < 16
    assert first <= boundary < 2 * first
    assert len({phase(seed, bank) for seed in range(4) for bank in range(4)}) > 1
    # Chip 0 keeps the default phase
    (engine,) = build_engines(["fr"], make_chip(), 0, seed=5, divergence="common-case")
    assert (engine.lock_region_ctr, engine.next_boundary) == (0, first)


def test_weak_rows_are_seeded():
    def weak(seed):
        (engine,) = build_engines(["vr"], make_chip(), 0, seed=seed)
        return engine.weak_rows

    assert weak(1) == weak(1)
    assert weak(1) != weak(2)
