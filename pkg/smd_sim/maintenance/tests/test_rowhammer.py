import itertools
from collections import Counter

import numpy as np
import pytest

from smd_sim.chip import Geometry, SmdChip
from smd_sim.maintenance import (
    CbfRowHammer,
    CounterTable,
    EventLog,
    MaintenanceEvent,
    MisraGriesRowHammer,
    ProbabilisticRowHammer,
    RowHammerOracle,
)
from smd_sim.maintenance.calculators import act_trefw
from smd_sim.timing import TimingParams


@pytest.fixture
def chip():
    return SmdChip(Geometry(), TimingParams())


def run_jobs(engine, now):
    """Tick ``engine`` until it has no work left, returning the last cycle."""
    engine.tick(now)
    while engine.job is not None or engine.staged is not None:
        now = engine.wake if engine.job is not None else now + 1
        engine.tick(now)
    return now


def test_prp_marks_every_act(chip):
    log = EventLog()
    engine = ProbabilisticRowHammer(chip, 0, log, p_mark=1.0)
    engine.on_act(600, 10)
    assert engine.mrt[1] == 600 - 512
    run_jobs(engine, 11)
    assert [e.row for e in log] == [599, 601]
    assert {e.region for e in log} == {1}
    assert engine.mrt[1] is None
    assert engine.victims_refreshed == 2


def test_prp_never_marks_with_zero_probability(chip):
    engine = ProbabilisticRowHammer(chip, 0, p_mark=0.0)
    for row in range(1000):
        engine.on_act(row, row)
    assert engine.marks == 0
    assert engine.marked_rows() == []


def test_prp_victims_across_region_boundary(chip):
    log = EventLog()
    engine = ProbabilisticRowHammer(chip, 0, log, p_mark=1.0)
    engine.mark(512, 0)
    run_jobs(engine, 1)
    assert [(e.region, e.row) for e in log] == [(0, 511), (1, 513)]
    assert [lock[3] for lock in log.locks] == [0, 1]


def test_prp_newer_mark_replaces_older(chip):
    engine = ProbabilisticRowHammer(chip, 0, p_mark=1.0)
    engine.mark(520, 0)
    engine.mark(530, 1)
    assert engine.marked_rows() == [530]
    engine.mark(5, 2)
    assert engine.marked_rows() == [5, 530]


def test_prp_blast_distance(chip):
    log = EventLog()
    engine = ProbabilisticRowHammer(chip, 0, log, p_mark=1.0, blast_distance=2)
    engine.mark(0, 0)
    run_jobs(engine, 1)
    assert [e.row for e in log] == [1, 2]


def test_prp_rejects_bad_probability(chip):
    with pytest.raises(ValueError):
        ProbabilisticRowHammer(chip, 0, p_mark=1.5)


def test_prp_sampling_rate(chip):
    engine = ProbabilisticRowHammer(chip, 0, p_mark=0.01, rng=np.random.default_rng(3))
    for i in range(100_000):
        engine.on_act(i % 8192, i)
    assert 800 < engine.marks < 1200


def test_cbf_overestimates_activations(chip):
    """The consulted filter never under-counts activations since it was last cleared."""
    engine = CbfRowHammer(chip, 0, act_max=10**9, window="1 ms", seed=9)
    rng = np.random.default_rng(4)
    rows = rng.zipf(1.3, size=100_000) % chip.geometry.rows_per_bank
    step = 20
    # Exact counts per filter since that filter was last cleared
    exact = (Counter(), Counter())
    for i, row in enumerate(rows.tolist()):
        now = i * step
        if now >= engine.next_swap:
            cleared = engine.active
            engine.advance(now)
            exact[cleared].clear()
            assert engine.active != cleared
            assert not engine.filters[cleared].counters.any()
        engine.on_act(row, now)
        exact[0][row] += 1
        exact[1][row] += 1
        assert engine.estimate(row) >= exact[engine.active][row]
    active = engine.active
    for row, count in exact[active].items():
        assert engine.estimate(row) >= count


def test_cbf_swaps_every_half_window(chip):
    engine = CbfRowHammer(chip, 0)
    half = chip.timing.tREFW_cycles // 2
    assert engine.half_window == half
    assert engine.next_timer() == half
    engine.advance(2 * half)
    assert engine.active == 0
    assert engine.next_timer() == 3 * half


def test_cbf_marks_only_heavy_rows(chip):
    engine = CbfRowHammer(chip, 0, act_max=100, p_mark=1.0)
    for i in range(100):
        engine.on_act(7, i)
    assert engine.marks == 0
    engine.on_act(7, 100)
    assert engine.marked_rows() == [7]


def test_counter_table_tracks_frequent_rows():
    table = CounterTable(2)
    assert table.record(1) == 1
    assert table.record(2) == 1
    assert table.min_count == 1
    # Spillover catches up with the minimum before a row is replaced
    assert table.record(3) is None
    assert table.spillover == 1
    assert table.record(3) == 2
    assert 1 not in table
    assert table.entries() == {2: 1, 3: 2}
    table.reset()
    assert len(table) == 0
    assert table.spillover == 0


def test_counter_table_upper_bounds():
    rng = np.random.default_rng(8)
    table = CounterTable(16)
    exact = Counter()
    for row in rng.integers(0, 64, size=20_000).tolist():
        table.record(row)
        exact[row] += 1
    assert table.spillover <= table.min_count
    for row, count in table.entries().items():
        assert count >= exact[row]
    for row in set(exact) - set(table.entries()):
        assert exact[row] <= table.spillover


def test_counter_table_rejects_empty():
    with pytest.raises(ValueError):
        CounterTable(0)


def hammer(engine, rows, acts):
    """Feed ``acts`` activations to a DRP engine at tRC spacing.

    Returns how many times a row reached ``act_max`` activations since its last
    trigger (or the last reset) without triggering.
    """
    trc = engine.timing.tRC
    window = act_trefw(engine.timing)
    exact = Counter()
    misses = 0
    for i, row in zip(range(acts), rows):
        now = i * trc
        engine.advance(now)
        if i % window == 0:
            exact.clear()
        before = engine.trigger_count
        engine.on_act(row, now)
        exact[row] += 1
        if engine.trigger_count > before:
            exact[row] = 0
        elif exact[row] >= engine.act_max:
            misses += 1
            exact[row] = 0
        engine.triggers.clear()
    return misses


def round_robin(n):
    return itertools.cycle(range(n))


def zipf_rows(seed, rows):
    rng = np.random.default_rng(seed)
    while True:
        yield from (rng.zipf(1.2, size=4096) % rows).tolist()


@pytest.fixture
def short_chip():
    timing = TimingParams().with_refresh_period("1 ms")
    return SmdChip(Geometry(), timing)


def test_drp_triggers_on_every_multiple(chip):
    engine = MisraGriesRowHammer(chip, 0, act_max=4, counters=8)
    for i in range(12):
        engine.on_act(100, i)
    assert list(engine.triggers) == [100, 100, 100]
    assert engine.levels == {100: 3}
    engine.advance(chip.timing.tREFW_cycles)
    assert engine.levels == {}
    assert len(engine.table) == 0


def test_drp_refreshes_victims(chip):
    log = EventLog()
    engine = MisraGriesRowHammer(chip, 0, log, act_max=2, counters=4)
    engine.on_act(40, 0)
    engine.on_act(40, 1)
    run_jobs(engine, 2)
    assert [e.row for e in log] == [39, 41]
    assert not engine.triggers


def test_drp_default_table_size(chip):
    assert MisraGriesRowHammer(chip, 0, act_max=512).table.size == 1250


@pytest.mark.parametrize("act_max", [64, 128])
@pytest.mark.parametrize("pattern", ["round-robin", "zipf", "single"])
def test_drp_never_misses_short_window(short_chip, act_max, pattern):
    window = act_trefw(short_chip.timing)
    engine = MisraGriesRowHammer(short_chip, 0, act_max=act_max)
    rows = {
        "round-robin": round_robin(engine.table.size + 1),
        "zipf": zipf_rows(act_max, 1 << 13),
        "single": itertools.repeat(7),
    }[pattern]
    assert hammer(engine, rows, 3 * window) == 0


def test_drp_undersized_table_misses(short_chip):
    act_max = 64
    window = act_trefw(short_chip.timing)
    n = window // act_max
    engine = MisraGriesRowHammer(short_chip, 0, act_max=act_max, counters=n - 2)
    assert hammer(engine, round_robin(n - 1), window) > 0


@pytest.mark.slow
@pytest.mark.parametrize("act_max", [256, 512, 1024])
@pytest.mark.parametrize("pattern", ["round-robin", "zipf", "single"])
def test_drp_never_misses(chip, act_max, pattern):
    window = act_trefw(chip.timing)
    assert window == 640_000
    engine = MisraGriesRowHammer(chip, 0, act_max=act_max)
    assert engine.table.size == window // act_max
    rows = {
        "round-robin": round_robin(engine.table.size + 1),
        "zipf": zipf_rows(act_max, chip.geometry.rows_per_bank),
        "single": itertools.repeat(7),
    }[pattern]
    assert hammer(engine, rows, 2 * window) == 0


@pytest.mark.slow
@pytest.mark.parametrize("act_max", [256, 512, 1024])
def test_drp_undersized_table_misses_full_window(chip, act_max):
    n = act_trefw(chip.timing) // act_max
    engine = MisraGriesRowHammer(chip, 0, act_max=act_max, counters=n - 2)
    assert hammer(engine, round_robin(n - 1), act_trefw(chip.timing)) > 0


def refreshed(*rows, time, chip=0, bank=0):
    return [MaintenanceEvent("smd-drp", "refresh", chip, bank, 0, row, time) for row in rows]


def test_oracle_flags_unrefreshed_victims(chip):
    oracle = RowHammerOracle(4, chip.timing.tREFW_cycles, chip.geometry)
    for now in range(7):
        oracle.activated(0, 0, 100, now)
    assert oracle.checks == 0
    oracle.activated(0, 0, 100, 7)
    assert oracle.checks == 1
    assert oracle.miss_count == 1
    assert "row 100 reached 8 activations" in oracle.misses[0]


def test_oracle_needs_a_refresh_between_multiples(chip):
    oracle = RowHammerOracle(4, chip.timing.tREFW_cycles, chip.geometry)
    for now in range(4):
        oracle.activated(0, 0, 100, now)
    oracle.record(refreshed(99, 101, time=5))
    for now in range(6, 14):
        oracle.activated(0, 0, 100, now)
    # Counts 8 and 12 are covered by the refresh after count 4, count 16 is not
    assert (oracle.checks, oracle.miss_count) == (2, 0)
    for now in range(14, 18):
        oracle.activated(0, 0, 100, now)
    assert (oracle.checks, oracle.miss_count) == (3, 1)


def test_oracle_keys_by_chip_and_bank(chip):
    oracle = RowHammerOracle(2, chip.timing.tREFW_cycles, chip.geometry)
    oracle.record(refreshed(9, 11, time=0, chip=1))
    for now in range(4):
        oracle.activated(1, 0, 10, now)
        oracle.activated(0, 0, 10, now)
        oracle.activated(1, 2, 10, now)
    assert oracle.checks == 3
    assert oracle.miss_count == 2


def test_oracle_restarts_counts_every_window(chip):
    window = 1000
    oracle = RowHammerOracle(4, window, chip.geometry)
    for now in range(window - 6, window + 6):
        oracle.activated(0, 0, 100, now)
    assert oracle.checks == 0
    assert oracle.counts[(0, 0, 100)] == 6


def test_oracle_ignores_scrubs(chip):
    oracle = RowHammerOracle(1, chip.timing.tREFW_cycles, chip.geometry)
    oracle.record(
        [MaintenanceEvent("smd-ms", "scrub", 0, 0, 0, row, 0, codewords=128) for row in (39, 41)]
    )
    oracle.activated(0, 0, 40, 1)
    oracle.activated(0, 0, 40, 2)
    assert oracle.miss_count == 1
    assert "row 39" in oracle.misses[0]


def test_oracle_listens_to_chip(chip):
    oracle = RowHammerOracle(512, chip.timing.tREFW_cycles, chip.geometry)
    oracle.attach(chip, 3)
    chip.handle_act(3, 40, 0)
    assert oracle.counts == {(0, 3, 40): 1}


def test_drp_engine_satisfies_oracle(short_chip):
    log = EventLog()
    engine = MisraGriesRowHammer(short_chip, 0, log, act_max=16)
    oracle = RowHammerOracle(16, short_chip.timing.tREFW_cycles, short_chip.geometry)
    trc = short_chip.timing.tRC
    now = 0
    for row in itertools.islice(itertools.cycle([7, 300, 301, 7, 7]), 2000):
        engine.advance(now)
        engine.on_act(row, now)
        oracle.activated(0, 0, row, now)
        now = run_jobs(engine, now) + trc
        oracle.record(log)
        log.clear()
    assert oracle.checks > 50
    assert oracle.miss_count == 0
