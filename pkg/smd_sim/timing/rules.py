"""Inter-command timing rules.

The same gap table drives two independent users: ``TimingTracker`` keeps an
incremental earliest-issue table that the controller schedules against, and
``check_stream`` re-derives every constraint from a finished command log.
"""
import enum
from collections import defaultdict, deque
from dataclasses import dataclass

from smd_sim.timing.commands import Command, CommandKind

_NONE = (0, None)


class Relation(enum.IntEnum):
    """How much hardware two commands share, from most to least."""

    BANK = 0
    BANKGROUP = 1
    RANK = 2
    CHANNEL = 3
    NONE = 4


def relation(a, b):
    if a.channel != b.channel:
        return Relation.NONE
    if a.rank != b.rank:
        return Relation.CHANNEL
    if a.bankgroup != b.bankgroup:
        return Relation.RANK
    if a.bank != b.bank:
        return Relation.BANKGROUP
    return Relation.BANK


def build_gap_table(p):
    """Map (earlier kind, later kind) to a ``(gap, rule)`` pair per ``Relation``."""
    K = CommandKind

    def bank_only(gap, rule):
        return ((gap, rule),) + (_NONE,) * 4

    def rank_wide(gap, rule):
        return ((gap, rule),) * 3 + (_NONE,) * 2

    table = {(a, b): (_NONE,) * 5 for a in K for b in K}
    table[K.ACT, K.ACT] = ((p.tRC, "tRC"), (p.tRRD_L, "tRRD_L"), (p.tRRD_S, "tRRD_S"), _NONE, _NONE)
    table[K.ACT, K.PRE] = bank_only(p.tRAS, "tRAS")
    table[K.ACT, K.RD] = bank_only(p.tRCD, "tRCD")
    table[K.ACT, K.WR] = bank_only(p.tRCD, "tRCD")
    table[K.ACT, K.REF] = rank_wide(p.tRC, "tRC")
    table[K.PRE, K.ACT] = bank_only(p.tRP, "tRP")
    table[K.PRE, K.REF] = rank_wide(p.tRP, "tRP")
    for kind in (K.RD, K.WR):
        table[kind, kind] = (
            (p.tCCD, "tCCD"),
            (p.tCCD, "tCCD"),
            (p.tBL, "tBL"),
            (p.tBL, "tBL"),
            _NONE,
        )
    table[K.RD, K.WR] = ((p.tRTW, "tRTW"),) * 3 + ((p.tBL, "tBL"), _NONE)
    table[K.WR, K.RD] = ((p.tCWL + p.tBL + p.tWTR, "tWTR"),) * 3 + ((p.tBL, "tBL"), _NONE)
    table[K.RD, K.PRE] = bank_only(p.tRTP, "tRTP")
    table[K.WR, K.PRE] = bank_only(p.tCWL + p.tBL + p.tWR, "tWR")
    for kind in K:
        if kind is not K.NOP:
            table[K.REF, kind] = rank_wide(p.tRFC, "tRFC")
    return table


def rule_for(earlier, later, params):
    """The ``(gap, rule)`` that ``earlier`` imposes on ``later``."""
    try:
        per_relation = params.gap_table[earlier.kind, later.kind]
    except KeyError:
        raise ValueError(
            f"Unknown command pair {earlier.kind!r} -> {later.kind!r}"
        ) from None
    return per_relation[relation(earlier.target, later.target)]


def min_gap(earlier, later, params):
    """Minimum number of cycles between issuing ``earlier`` and ``later``.

    A NACKed ACT never opened a row so it constrains nothing.
    """
    if earlier.kind is CommandKind.ACT and earlier.nacked:
        return 0
    return rule_for(earlier, later, params)[0]


class TimingTracker:
    """Earliest legal issue cycle for every bank and command kind of one channel.

    Banks are addressed by their flat index within the channel. Constraints are
    folded in as commands are recorded. A NACKed ACT is only known to be NACKed
    a few cycles after issue, so ``retract`` rebuilds the table without it.
    """

    def __init__(self, params, geometry, channel=0):
        self.params = params
        self.channel = channel
        self.addresses = [
            geometry.bank_address(channel, b) for b in range(geometry.banks_per_channel)
        ]
        self._ranks = [a.rank for a in self.addresses]
        self._relations = [
            [relation(a, b) for b in self.addresses] for a in self.addresses
        ]
        self._kind_index = {k: i for i, k in enumerate(CommandKind)}
        table = params.gap_table
        self._gaps = {
            a: [
                (self._kind_index[b], tuple(g for g, _ in table[a, b]))
                for b in CommandKind
                if any(g for g, _ in table[a, b])
            ]
            for a in CommandKind
        }
        self._horizon = max(
            [params.tFAW] + [g for per in table.values() for g, _ in per]
        )
        self._history = deque()
        self._reset()
        self._bus = -1

    def _reset(self):
        self._ready = [[0] * len(CommandKind) for _ in self.addresses]
        self._faw = defaultdict(lambda: deque(maxlen=4))

    def earliest(self, kind, bank):
        t = max(self._ready[bank][self._kind_index[kind]], self._bus + 1)
        if kind is CommandKind.ACT:
            window = self._faw[self._ranks[bank]]
            if len(window) == 4:
                t = max(t, window[0] + self.params.tFAW)
        return t

    def record(self, command, bank):
        t = command.issue_time
        self._bus = max(self._bus, t)
        self._history.append((command, bank))
        while self._history and self._history[0][0].issue_time < t - self._horizon:
            self._history.popleft()
        self._apply(command, bank)

    def _apply(self, command, bank):
        t = command.issue_time
        for other, rel in enumerate(self._relations[bank]):
            ready = self._ready[other]
            for k, gaps in self._gaps[command.kind]:
                gap = gaps[rel]
                if gap and t + gap > ready[k]:
                    ready[k] = t + gap
        if command.kind is CommandKind.ACT:
            self._faw[self._ranks[bank]].append(t)

    def retract(self, command):
        self._history = deque((c, b) for c, b in self._history if c is not command)
        self._reset()
        for c, b in self._history:
            self._apply(c, b)


@dataclass(frozen=True)
class Violation:
    rule: str
    earlier: Command
    later: Command
    required: int
    actual: int

    def __str__(self):
        return (
            f"{self.rule}: {self.later.kind.value}@{self.later.issue_time} follows "
            f"{self.earlier.kind.value}@{self.earlier.issue_time} after {self.actual} "
            f"cycles, needs {self.required}"
        )


def check_stream(commands, params):
    """Return every timing violation in ``commands``, sorted by issue time.

    Each channel is checked on its own. Besides the pairwise gaps this checks
    the four-activate window and that no two commands share a command bus cycle.
    """
    table = params.gap_table
    violations = []
    last = defaultdict(dict)
    windows = defaultdict(lambda: deque(maxlen=4))
    bus = {}

    for command in commands:
        if command.kind is CommandKind.NOP:
            continue
        t = command.issue_time
        target = command.target
        previous = bus.get(target.channel)
        if previous is not None and t <= previous.issue_time:
            violations.append(
                Violation("command-bus", previous, command, 1, t - previous.issue_time)
            )
        bus[target.channel] = command
        if command.nacked:
            continue

        for earlier in last[target.channel].values():
            gap, rule = table[earlier.kind, command.kind][relation(earlier.target, target)]
            if gap and t - earlier.issue_time < gap:
                violations.append(
                    Violation(rule, earlier, command, gap, t - earlier.issue_time)
                )

        if command.kind is CommandKind.ACT:
            window = windows[target.channel, target.rank]
            if len(window) == 4 and t - window[0].issue_time < params.tFAW:
                violations.append(
                    Violation(
                        "tFAW", window[0], command, params.tFAW, t - window[0].issue_time
                    )
                )
            window.append(command)

        key = (target.rank, target.bankgroup, target.bank, command.kind)
        last[target.channel][key] = command

    return violations
