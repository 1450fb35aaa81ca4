import numpy as np
import pytest

from smd_sim.chip import BaselineChip, Geometry, SmdChip
from smd_sim.exceptions import ConfigError, InvariantViolation
from smd_sim.maintenance import EventLog, FixedRateRefresh, VariableRefresh
from smd_sim.timing import TimingParams


def drive(engines, until, traffic=()):
    """Tick ``engines`` up to cycle ``until``.

    ``traffic`` is a sorted list of ``(cycle, callable)`` run at that cycle,
    before the engines. Engines waiting for a lock sleep until their next timer
    or the next traffic event, whichever comes first.
    """
    traffic = list(traffic)
    now = 0
    while now < until:
        while traffic and traffic[0][0] <= now:
            traffic.pop(0)[1](now)
        for engine in engines:
            if engine.wake <= now:
                engine.tick(now)
        following = traffic[0][0] if traffic else until
        candidates = [following]
        for engine in engines:
            if engine.staged is not None and engine.job is None:
                candidates.append(max(now + 1, min(engine.next_timer(), following)))
            else:
                candidates.append(engine.wake)
        now = max(now + 1, min(candidates))


def gaps(events, rows_per_bank, start=0, end=None):
    last = np.full(rows_per_bank, start, dtype=np.int64)
    worst = 0
    for event in events:
        worst = max(worst, event.time - int(last[event.row]))
        last[event.row] = event.time
    if end is not None:
        worst = max(worst, end - int(last.min()))
    return worst


@pytest.fixture
def chip():
    return SmdChip(Geometry(), TimingParams())


def test_pending_counter(chip):
    engine = FixedRateRefresh(chip, 0)
    assert engine.pending == 0
    engine.on_trefi()
    assert engine.pending == 1


def test_pending_overflow(chip):
    engine = FixedRateRefresh(chip, 0)
    for _ in range(8):
        engine.on_trefi()
    with pytest.raises(InvariantViolation):
        engine.on_trefi()


def test_first_operation(chip):
    log = EventLog()
    engine = FixedRateRefresh(chip, 0, log)
    t = chip.timing.tREFI_cycles
    engine.tick(t - 1)
    assert engine.job is None
    events = engine.tick(t)
    assert [e.row for e in events] == list(range(16))
    assert {e.region for e in events} == {0}
    assert events[-1].time == t + 16 * 80
    assert chip.locks[0].is_locked(0)
    assert chip.latches[0] == {0: 0}
    assert log.locks == [("smd-fr", 0, 0, 0, t, t + 1280)]
    assert engine.wake == t + 1280

    engine.tick(t + 1280)
    assert not chip.locks[0].is_locked(0)
    assert engine.pending == 0
    assert engine.lock_region_ctr == 1
    assert engine.wake == 2 * t


def test_counters_roll_over(chip):
    engine = FixedRateRefresh(chip, 0)
    engine.pending = 16
    for _ in range(16):
        engine.advance_counters()
    assert (engine.lock_region_ctr, engine.row_addr_ctr) == (0, 1)
    assert list(engine.target_rows()) == list(range(16, 32))


def test_lock_waits_for_open_row(chip):
    engine = FixedRateRefresh(chip, 0)
    t = chip.timing.tREFI_cycles
    chip.handle_act(0, 3, t - 100)
    engine.tick(t)
    assert engine.job is None
    assert engine.staged is not None
    assert engine.wake == t + 1
    chip.handle_pre(0, t + 10)
    engine.tick(t + 40)
    assert engine.job is not None


def test_bad_refresh_granularity(chip):
    with pytest.raises(ConfigError):
        FixedRateRefresh(chip, 0, rg=24)
    with pytest.raises(ConfigError):
        FixedRateRefresh(chip, 0, rg=0)


def test_needs_smd_chip():
    with pytest.raises(ConfigError):
        FixedRateRefresh(BaselineChip(Geometry(), TimingParams()), 0)


def test_every_row_refreshed_each_sweep(chip):
    log = EventLog()
    engines = [FixedRateRefresh(chip, b, log) for b in range(2)]
    trefi = chip.timing.tREFI_cycles
    sweep = chip.geometry.rows_per_bank // 16
    end = 3 * sweep * trefi
    drive(engines, end)
    bank0 = [e for e in log if e.bank == 0]
    assert len(bank0) >= 2 * chip.geometry.rows_per_bank
    assert gaps(bank0, chip.geometry.rows_per_bank, end=end) <= (sweep + 17) * trefi
    assert all(e.sweeps >= 2 for e in engines)


def test_refresh_survives_row_open_cap(chip):
    """Rows held open for six tREFI in the region due next only delay refresh."""
    log = EventLog()
    engine = FixedRateRefresh(chip, 0, log)
    trefi = chip.timing.tREFI_cycles
    sweep = chip.geometry.rows_per_bank // 16
    end = 2 * sweep * trefi
    traffic = []

    def opener(now):
        region = engine.lock_region_ctr
        if engine.job is not None and engine.job.region == region:
            region = (region + 1) % chip.geometry.regions_per_bank
        if chip.bank_state(0, now).row is None:
            rows = chip.geometry.rows_per_region
            chip.handle_act(0, region * rows + rows // 2, now)

    def closer(now):
        chip.handle_pre(0, now)

    for k in range(0, end // trefi - 10, 10):
        traffic.append((k * trefi + 3, opener))
        traffic.append(((k + 6) * trefi + 3, closer))
    drive([engine], end, traffic)
    assert engine.pending <= 8
    assert gaps(log, chip.geometry.rows_per_bank, end=end) <= (sweep + 17) * trefi


@pytest.mark.slow
def test_refresh_window_full_geometry():
    geometry = Geometry.from_config(profile="full")
    chip = SmdChip(geometry, TimingParams())
    log = EventLog()
    engine = FixedRateRefresh(chip, 0, log)
    timing = chip.timing
    end = 3 * timing.tREFW_cycles
    drive([engine], end)
    bound = timing.tREFW_cycles + 17 * timing.tREFI_cycles
    assert gaps(log, geometry.rows_per_bank, end=end) <= bound


def test_variable_refresh_oracle(chip):
    """Weak rows are refreshed every sweep, strong rows every fourth sweep."""
    rng = np.random.default_rng(1)
    weak = rng.choice(chip.geometry.rows_per_bank, size=64, replace=False).tolist()
    log = EventLog()
    engine = VariableRefresh(chip, 0, log, weak_rows=weak, vr_factor=4, start_cycle=1, seed=5)
    trefi = chip.timing.tREFI_cycles
    sweep = chip.geometry.rows_per_bank // 16
    end = 9 * sweep * trefi
    drive([engine], end)
    assert engine.refresh_cycle_ctr == 9

    rows = chip.geometry.rows_per_bank
    weak_set = set(weak)
    weak_events = [e for e in log if e.row in weak_set]
    strong_events = [e for e in log if e.row not in weak_set]
    slack = 17 * trefi
    assert gaps(weak_events, rows) <= sweep * trefi + slack
    refreshed = {e.row for e in strong_events}
    assert refreshed | weak_set == set(range(rows))
    last = np.zeros(rows, dtype=np.int64)
    worst = 0
    for e in strong_events:
        if last[e.row]:
            worst = max(worst, e.time - int(last[e.row]))
        last[e.row] = e.time
    assert worst <= 4 * sweep * trefi + slack
    assert engine.skipped_rows > 0


def test_variable_refresh_takes_no_lock_for_skipped_rows(chip):
    log = EventLog()
    engine = VariableRefresh(chip, 0, log, weak_rows=[3], vr_factor=4, start_cycle=1)
    trefi = chip.timing.tREFI_cycles
    drive([engine], 20 * trefi + 1)
    # Only the first operation covers the weak row
    assert [e.row for e in log] == [3]
    assert len(log.locks) == 1


def test_variable_refresh_rejects_bad_factor(chip):
    with pytest.raises(ConfigError):
        VariableRefresh(chip, 0, vr_factor=0)
