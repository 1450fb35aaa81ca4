import dataclasses

import pytest

from smd_sim.chip import Geometry
from smd_sim.exceptions import ConfigError
from smd_sim.timing import (
    Address,
    Command,
    CommandKind,
    Relation,
    TimingParams,
    TimingTracker,
    check_stream,
    cycles_to_ns,
    min_gap,
    ns_to_cycles,
    relation,
)
from smd_sim.timing.rules import rule_for

ACT, PRE, RD, WR, REF = (
    CommandKind.ACT,
    CommandKind.PRE,
    CommandKind.RD,
    CommandKind.WR,
    CommandKind.REF,
)


def cmd(kind, t, bankgroup=0, bank=0, rank=0, channel=0, row=0, nacked=False):
    return Command(
        kind,
        Address(channel=channel, rank=rank, bankgroup=bankgroup, bank=bank, row=row),
        t,
        nacked=nacked,
    )


@pytest.mark.parametrize(
    "ns,cycles",
    [(0, 0), (13.5, 22), (13.75, 22), (13.76, 23), (3900, 6240), (7800, 12480), (32e6, 51_200_000)],
)
def test_ns_to_cycles(ns, cycles):
    assert ns_to_cycles(ns, TimingParams()) == cycles


def test_ns_to_cycles_rejects_negative():
    with pytest.raises(ValueError):
        ns_to_cycles(-1, TimingParams())


def test_cycles_to_ns():
    assert cycles_to_ns(1600, TimingParams()) == 1000


def test_default_profile():
    p = TimingParams()
    assert p.tRC == 80
    assert p.tREFI_cycles == 6240
    assert p.tREFW_cycles == 51_200_000
    assert p.ARI_cycles == 96
    assert p.T_nack <= p.tCL


def test_from_config():
    p = TimingParams.from_config()
    assert p == TimingParams()
    p = TimingParams.from_config({"trcd": 24, "trefw": "64 ms"})
    assert p.tRCD == 24
    assert p.tREFW == 64e6
    assert TimingParams.from_config(tRP=30).tRP == 30


def test_with_refresh_period():
    p = TimingParams().with_refresh_period("8 ms")
    assert p.tREFW == 8e6
    assert p.tREFI == pytest.approx(8e6 / 8192)
    assert p.tREFW_cycles == 12_800_000


@pytest.mark.parametrize(
    "change",
    [
        {"tRCD": 0},
        {"tRAS": 10},
        {"tREFW": 100.0},
        {"ARI": 10.0},
        {"tCL": "22"},
    ],
)
def test_invalid_profiles(change):
    with pytest.raises(ConfigError):
        dataclasses.replace(TimingParams(), **change)


def test_relation():
    a = Address()
    assert relation(a, a) is Relation.BANK
    assert relation(a, Address(bank=1)) is Relation.BANKGROUP
    assert relation(a, Address(bankgroup=1)) is Relation.RANK
    assert relation(a, Address(rank=1)) is Relation.CHANNEL
    assert relation(a, Address(channel=1)) is Relation.NONE


@pytest.mark.parametrize(
    "earlier,later,gap",
    [
        (cmd(ACT, 0), cmd(RD, 0), 22),
        (cmd(ACT, 0), cmd(PRE, 0), 56),
        (cmd(PRE, 0), cmd(ACT, 0), 24),
        (cmd(ACT, 0), cmd(ACT, 0), 80),
        (cmd(ACT, 0), cmd(ACT, 0, bank=1), 8),
        (cmd(ACT, 0), cmd(ACT, 0, bankgroup=1), 4),
        (cmd(ACT, 0), cmd(ACT, 0, rank=1), 0),
        (cmd(RD, 0), cmd(RD, 0, bank=1), 8),
        (cmd(RD, 0), cmd(RD, 0, bankgroup=1), 4),
        (cmd(WR, 0), cmd(RD, 0, bankgroup=1), 16 + 4 + 12),
        (cmd(WR, 0), cmd(PRE, 0), 16 + 4 + 24),
        (cmd(REF, 0), cmd(ACT, 0, bankgroup=3), 560),
        (cmd(PRE, 0), cmd(REF, 0, bank=1), 24),
    ],
)
def test_min_gap(earlier, later, gap):
    assert min_gap(earlier, later, TimingParams()) == gap


def test_nacked_act_constrains_nothing():
    p = TimingParams()
    assert min_gap(cmd(ACT, 0, nacked=True), cmd(ACT, 0), p) == 0
    assert rule_for(cmd(ACT, 0), cmd(RD, 0), p) == (22, "tRCD")


def test_check_stream_clean():
    stream = [cmd(ACT, 0), cmd(RD, 22), cmd(RD, 30), cmd(PRE, 56), cmd(ACT, 80)]
    assert check_stream(stream, TimingParams()) == []


def test_check_stream_trcd():
    violations = check_stream([cmd(ACT, 0), cmd(RD, 21)], TimingParams())
    assert len(violations) == 1
    (v,) = violations
    assert v.rule == "tRCD"
    assert (v.required, v.actual) == (22, 21)
    assert "tRCD" in str(v)


def test_check_stream_tfaw():
    stream = [
        cmd(ACT, 0, bankgroup=0, bank=0),
        cmd(ACT, 4, bankgroup=1, bank=0),
        cmd(ACT, 8, bankgroup=2, bank=0),
        cmd(ACT, 12, bankgroup=3, bank=0),
        cmd(ACT, 16, bankgroup=0, bank=1),
    ]
    violations = check_stream(stream, TimingParams())
    assert [v.rule for v in violations] == ["tFAW"]


def test_check_stream_command_bus():
    violations = check_stream([cmd(ACT, 0), cmd(ACT, 0, rank=1)], TimingParams())
    assert [v.rule for v in violations] == ["command-bus"]


def test_check_stream_skips_nacked_act():
    stream = [cmd(ACT, 0, nacked=True), cmd(ACT, 10), cmd(RD, 32)]
    assert check_stream(stream, TimingParams()) == []


def test_check_stream_channels_independent():
    stream = [cmd(ACT, 0), cmd(ACT, 1, channel=1), cmd(RD, 22), cmd(RD, 23, channel=1)]
    assert check_stream(stream, TimingParams()) == []


def test_tracker_earliest_and_retract():
    p = TimingParams()
    tracker = TimingTracker(p, Geometry())
    act = cmd(ACT, 0)
    tracker.record(act, 0)
    assert tracker.earliest(RD, 0) == 22
    assert tracker.earliest(ACT, 0) == 80
    assert tracker.earliest(ACT, 1) == 8
    tracker.retract(act)
    assert tracker.earliest(ACT, 0) == 1
    assert tracker.earliest(RD, 0) == 1


def test_tracker_four_activate_window():
    p = TimingParams()
    geometry = Geometry()
    tracker = TimingTracker(p, geometry)
    banks = [0, 2, 4, 6]
    for i, bank in enumerate(banks):
        a = geometry.bank_address(0, bank)
        tracker.record(Command(ACT, a, i * 4), bank)
    assert tracker.earliest(ACT, 1) == p.tFAW


def test_command_text():
    c = cmd(ACT, 17, bankgroup=2, bank=1, row=300, nacked=True)
    assert c.dumps() == "17 ACT 0 0 2 1 0 0 300 0 NACK"
    assert Command.loads(c.dumps()) == c
    with pytest.raises(ValueError):
        Command.loads("17 ACT 0 0")
