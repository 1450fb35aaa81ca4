import heapq
import itertools
import logging
import math
from collections import Counter, deque
from dataclasses import dataclass
from typing import NamedTuple, Optional

from smd_sim.config import SimConfig, duration_ns, section
from smd_sim.controller.nack import NackLedger
from smd_sim.controller.policy import DivergencePolicy
from smd_sim.controller.refresh import BaselineRefresh, ControllerPara, ControllerScrub
from smd_sim.controller.request import RequestKind
from smd_sim.exceptions import ConfigError, ProtocolError
from smd_sim.maintenance.base import MaintenanceEvent
from smd_sim.timing.commands import Address, Command, CommandKind
from smd_sim.timing.params import ns_to_cycles
from smd_sim.timing.rules import TimingTracker

logger = logging.getLogger(__name__)

CLOSED = "closed"
OPENING = "opening"
OPEN = "open"
PARTIAL = "partial"

BASELINE_REFRESH_MODES = ("ddr4", "mc-para", "ddr4-scrub")

ACT, PRE, RD, WR, REF = (
    CommandKind.ACT,
    CommandKind.PRE,
    CommandKind.RD,
    CommandKind.WR,
    CommandKind.REF,
)


@dataclass(frozen=True)
class ControllerConfig:
    queue_size: int = 64
    row_hit_cap: int = 16
    write_high_watermark: float = 0.75
    write_low_watermark: float = 0.25
    max_row_open_trefi: int = 6
    closed_page_timeout: Optional[int] = None
    divergence_policy: DivergencePolicy = DivergencePolicy.WAIT
    hybrid_threshold: int = 4
    baseline_refresh: bool = False
    max_postponed_refs: int = 8
    para_p_mark: Optional[float] = None
    para_blast_distance: int = 1
    scrub_period: Optional[str] = None

    def __post_init__(self):
        if self.queue_size < 1 or self.row_hit_cap < 1 or self.max_row_open_trefi < 1:
            raise ConfigError("queue_size, row_hit_cap and max_row_open_trefi must be positive")
        if not 0 <= self.write_low_watermark < self.write_high_watermark <= 1:
            raise ConfigError("Write watermarks must satisfy 0 <= low < high <= 1")

    @classmethod
    def from_config(cls, mode, timing, config=None):
        """Controller settings for ``mode`` from ``smdsim.controller`` or a section dict."""
        cfg = section("controller") if config is None else SimConfig(config)
        timeout = cfg.get("closed_page_timeout")
        return cls(
            queue_size=cfg.get("queue_size", 64),
            row_hit_cap=cfg.get("row_hit_cap", 16),
            write_high_watermark=cfg.get("write_high_watermark", 0.75),
            write_low_watermark=cfg.get("write_low_watermark", 0.25),
            max_row_open_trefi=cfg.get("max_row_open_trefi", 6),
            closed_page_timeout=None
            if timeout is None
            else ns_to_cycles(duration_ns(timeout), timing),
            divergence_policy=DivergencePolicy.parse(cfg.get("divergence_policy", "wait")),
            hybrid_threshold=cfg.get("hybrid_threshold", 4),
            baseline_refresh=mode in BASELINE_REFRESH_MODES,
            max_postponed_refs=cfg.get("max_postponed_refs", 8),
            para_p_mark=cfg.get("para.p_mark", 0.01) if mode == "mc-para" else None,
            para_blast_distance=cfg.get("para.blast_distance", 1),
            scrub_period=cfg.get("scrub.period", "5 minutes") if mode == "ddr4-scrub" else None,
        )


class _Bank:
    """What the controller knows about one bank."""

    __slots__ = (
        "index",
        "rank",
        "local",
        "state",
        "row",
        "act",
        "outcome",
        "act_time",
        "opened_at",
        "hits",
        "last_use",
        "retry_at",
        "close",
        "internal",
        "victims",
        "active",
    )

    def __init__(self, index, rank, local):
        self.index = index
        self.rank = rank
        self.local = local
        self.state = CLOSED
        self.row = None
        self.act = None
        self.outcome = None
        self.act_time = None
        self.opened_at = None
        self.hits = 0
        self.last_use = 0
        self.retry_at = 0
        self.close = False
        self.internal = False
        self.victims = deque()
        self.active = False


class _Candidate(NamedTuple):
    prio: int
    order: int
    kind: CommandKind
    bank: _Bank
    row: Optional[int]
    request: object
    not_before: int
    flag: Optional[str]


class MemoryController:
    """An FR-FCFS-Cap memory controller for one channel.

    Each cycle it picks at most one command over all banks: maintenance work
    (refresh drains, row-open cap closes, divergence handling, PARA victims)
    first, then row hits (while a bank has served fewer than ``row_hit_cap``
    hits in a row) and finally the oldest request, subject to every timing
    constraint. Reads are served ahead of writes until the write queue passes
    its high watermark, then writes drain down to the low watermark.

    Against SMD chips an ACT may be NACKed. The controller learns this
    ``T_nack`` cycles after the ACT, forgets the ACT and does not activate that
    region again for ARI. A region with pending requests keeps being retried,
    while requests to other regions of the bank go ahead.

    Parameters
    ----------
    channel: int
    ranks: list of smd_sim.chip.Rank
    timing: smd_sim.timing.TimingParams
    geometry: smd_sim.chip.Geometry
    config: ControllerConfig
    energy: object
        Anything with ``account(command)``, typically an ``EnergyAccumulator``.
    log: list
        Issued commands are appended here when given.
    sink: object
        Receives ``record(events)`` for rows refreshed by REF commands.
    rng: numpy.random.Generator
        Draws for PARA marking.
    """

    def __init__(
        self,
        channel,
        ranks,
        timing,
        geometry,
        config=None,
        energy=None,
        log=None,
        sink=None,
        rng=None,
    ):
        self.channel = channel
        self.ranks = list(ranks)
        self.timing = timing
        self.geometry = geometry
        self.config = config = ControllerConfig() if config is None else config
        self.energy = energy
        self.log = log
        self.sink = sink
        self.tracker = TimingTracker(timing, geometry, channel)
        per_rank = geometry.banks_per_rank
        self.banks = [
            _Bank(b, b // per_rank, b % per_rank) for b in range(geometry.banks_per_channel)
        ]
        self.reads = [[] for _ in self.banks]
        self.writes = [[] for _ in self.banks]
        self.read_count = 0
        self.write_count = 0
        self.rank_queued = [0] * len(self.ranks)
        self.demand_pending = 0
        self.ledger = NackLedger(timing.ARI_cycles)

        self.refresh = None
        if config.baseline_refresh:
            if any(r.autonomous for r in self.ranks):
                raise ConfigError("REF based refresh needs conventional DDR4 chips")
            self.refresh = BaselineRefresh(len(self.ranks), timing, config.max_postponed_refs)
        self.para = None
        if config.para_p_mark is not None:
            if rng is None:
                raise ConfigError("Controller PARA needs a random stream")
            self.para = ControllerPara(config.para_p_mark, config.para_blast_distance, geometry, rng)
        self.scrubber = None
        if config.scrub_period is not None:
            self.scrubber = ControllerScrub(config.scrub_period, geometry, timing, channel)

        self.max_open = config.max_row_open_trefi * timing.tREFI_cycles
        self.write_high = math.ceil(config.write_high_watermark * config.queue_size)
        self.write_low = math.floor(config.write_low_watermark * config.queue_size)
        self.draining_writes = False
        self.events = []
        self._seq = itertools.count()
        self.wake = 0
        self.counts = Counter()
        self._nacked = set()
        self._open_banks = [0] * len(self.ranks)
        self._active_since = [0] * len(self.ranks)
        self.active_cycles = [0] * len(self.ranks)

    def __repr__(self):
        return (
            f"<MemoryController channel={self.channel} reads={self.read_count} "
            f"writes={self.write_count}>"
        )

    @property
    def idle(self):
        """No demand request is queued or waiting for data."""
        return self.demand_pending == 0

    def enqueue(self, request, now):
        """Accept ``request`` into its queue, or return ``False`` if that queue is full."""
        is_read = request.kind is RequestKind.READ
        if (self.read_count if is_read else self.write_count) >= self.config.queue_size:
            return False
        address = self.geometry.decompose(request.paddr)
        if address.channel != self.channel:
            raise ProtocolError(
                f"Request for channel {address.channel} sent to controller {self.channel}"
            )
        request.address = address
        request.bank = self.geometry.flat_bank(address)
        request.row = address.row
        request.arrival = now
        request.seq = next(self._seq)
        if is_read:
            self.reads[request.bank].append(request)
            self.read_count += 1
        else:
            self.writes[request.bank].append(request)
            self.write_count += 1
        self.rank_queued[address.rank] += 1
        if not request.internal:
            self.demand_pending += 1
        self.counts["enqueued"] += 1
        self.wake = min(self.wake, now)
        return True

    def tick(self, now):
        """Advance to cycle ``now`` and issue at most one command, which is returned."""
        events = self.events
        while events and events[0][0] <= now:
            t, _, handler, payload = heapq.heappop(events)
            handler(payload, t)
            self.wake = now
        if self.refresh is not None and self.refresh.tick(now, self._rank_busy):
            self.wake = now
        if self.scrubber is not None:
            backlog = self.scrubber.tick(now)
            while backlog and self.read_count < self.config.queue_size:
                self.enqueue(backlog.popleft(), now)
        if now < self.wake:
            return None
        return self._schedule(now)

    def _rank_busy(self, rank):
        return self.rank_queued[rank] > 0

    def _after(self, t, handler, payload):
        heapq.heappush(self.events, (t, next(self._seq), handler, payload))

    def _serve_writes(self):
        if self.draining_writes:
            if self.write_count <= self.write_low:
                self.draining_writes = False
        elif self.write_count >= self.write_high:
            self.draining_writes = True
        return self.draining_writes or (self.read_count == 0 and self.write_count > 0)

    def _schedule(self, now):
        serve_writes = self._serve_writes()
        tracker = self.tracker
        best = None
        wake = math.inf
        for bank in self.banks:
            candidate = self._candidate(bank, now, serve_writes)
            if candidate is None:
                continue
            ready = max(candidate.not_before, tracker.earliest(candidate.kind, bank.index))
            if ready > now:
                wake = min(wake, ready)
            elif best is None or (candidate.prio, candidate.order) < (best.prio, best.order):
                best = candidate

        if self.refresh is not None:
            per_rank = self.geometry.banks_per_rank
            for rank, draining in enumerate(self.refresh.draining):
                if not draining:
                    continue
                first = rank * per_rank
                if any(b.state is not CLOSED for b in self.banks[first : first + per_rank]):
                    continue
                ready = tracker.earliest(REF, first)
                if ready > now:
                    wake = min(wake, ready)
                elif best is None or (0, -1) < (best.prio, best.order):
                    best = _Candidate(0, -1, REF, self.banks[first], None, None, now, "refresh")

        if best is None:
            self.wake = wake
            return None
        command = self._issue(best, now)
        self.wake = now + 1
        return command

    def _candidate(self, bank, now, serve_writes):
        state = bank.state
        if state is OPENING:
            return None
        if self.refresh is not None and self.refresh.draining[bank.rank]:
            if state is OPEN:
                return _Candidate(0, -1, PRE, bank, None, None, now, "refresh")
            return None
        if state is PARTIAL:
            if bank.close:
                return _Candidate(0, -1, PRE, bank, None, None, now, "divergence")
            return _Candidate(0, -1, ACT, bank, bank.row, None, bank.retry_at, "retry")
        if bank.victims:
            if state is CLOSED:
                return _Candidate(0, -1, ACT, bank, bank.victims[0], None, now, "internal")
            return _Candidate(0, -1, PRE, bank, None, None, now, "internal")

        queue = self.writes[bank.index] if serve_writes else self.reads[bank.index]
        if state is OPEN:
            deadline = bank.opened_at + self.max_open
            if now >= deadline:
                return _Candidate(0, -1, PRE, bank, None, None, now, "cap")
            hit = None
            if queue:
                if queue[0].row == bank.row:
                    hit = queue[0]
                elif bank.hits < self.config.row_hit_cap:
                    hit = next((r for r in queue if r.row == bank.row), None)
            if hit is not None:
                kind = RD if hit.kind is RequestKind.READ else WR
                return _Candidate(1, hit.seq, kind, bank, bank.row, hit, now, None)
            if queue:
                return _Candidate(2, queue[0].seq, PRE, bank, None, None, now, None)
            timeout = self.config.closed_page_timeout
            if timeout is not None and bank.last_use + timeout < deadline:
                return _Candidate(0, -1, PRE, bank, None, None, bank.last_use + timeout, "timeout")
            return _Candidate(0, -1, PRE, bank, None, None, deadline, "cap")

        if not queue:
            return None
        earliest = math.inf
        for request in queue:
            t = self.ledger.earliest(bank.index, request.address.region, now)
            if t <= now:
                return _Candidate(2, request.seq, ACT, bank, request.row, request, now, None)
            earliest = min(earliest, t)
        return _Candidate(2, queue[0].seq, ACT, bank, queue[0].row, queue[0], earliest, None)

    def _issue(self, candidate, now):
        kind = candidate.kind
        bank = candidate.bank
        rank = self.ranks[bank.rank]
        base = self.tracker.addresses[bank.index]
        counts = self.counts

        if kind is ACT:
            target = self.geometry.locate(base, candidate.row)
            retry = candidate.flag == "retry"
            outcome = rank.handle_act(bank.local, candidate.row, now, retry=retry)
            command = Command(ACT, target, now, nacked=outcome.rejected)
            bank.state = OPENING
            bank.row = candidate.row
            bank.act = command
            bank.outcome = outcome
            bank.internal = candidate.flag == "internal"
            if not retry:
                bank.act_time = now
            if outcome.accepted:
                self._rank_open(bank, now)
            self._after(now + self.timing.T_nack, self._resolve, bank)
            counts["act"] += 1
            if retry:
                counts["divergence_retries"] += 1

        elif kind is PRE:
            target = self.geometry.locate(base, bank.row)
            rank.handle_pre(bank.local, now)
            command = Command(PRE, target, now)
            if candidate.flag == "cap":
                counts["forced_precharges"] += 1
            if bank.internal:
                bank.victims.popleft()
                counts["para_victim_refreshes"] += 1
            elif self.para is not None and bank.state is OPEN:
                bank.victims.extend(self.para.on_close(bank.row))
            bank.state = CLOSED
            bank.row = None
            bank.close = False
            bank.internal = False
            bank.hits = 0
            self._rank_close(bank, now)
            counts["pre"] += 1

        elif kind is REF:
            target = Address(channel=self.channel, rank=bank.rank)
            refreshed, _ = rank.handle_ref(now)
            command = Command(REF, target, now)
            self.refresh.on_ref(bank.rank)
            if self.sink is not None:
                self.sink.record(self._ref_events(bank.rank, refreshed, now))
            counts["ref"] += 1

        else:
            request = candidate.request
            if bank.state is not OPEN or request.row != bank.row:
                raise ProtocolError(
                    f"{kind.value} to bank {bank.index} row {request.row} without an accepted ACT"
                )
            queue = self.reads if request.kind is RequestKind.READ else self.writes
            queue[bank.index].remove(request)
            self.rank_queued[bank.rank] -= 1
            request.issued = now
            bank.hits += 1
            bank.last_use = now
            command = Command(kind, request.address, now)
            if kind is RD:
                self.read_count -= 1
                self._after(now + self.timing.tCL + self.timing.tBL, self._complete, request)
                counts["rd"] += 1
            else:
                self.write_count -= 1
                request.completed = now + self.timing.tCWL + self.timing.tBL
                if not request.internal:
                    self.demand_pending -= 1
                counts["wr"] += 1
                counts["writes_done"] += 1

        self.tracker.record(command, bank.index)
        if self.log is not None:
            self.log.append(command)
        if self.energy is not None:
            self.energy.account(command)
        return command

    def _ref_events(self, rank, refreshed, now):
        per_rank = self.geometry.banks_per_rank
        offset = self.channel * self.geometry.banks_per_channel + rank * per_rank
        done = now + self.timing.tRFC
        return [
            MaintenanceEvent(
                "ddr4-ref", "refresh", 0, offset + b, self.geometry.region_of(row), row, done
            )
            for b, rows in refreshed.items()
            for row in rows
        ]

    def _resolve(self, bank, t):
        if bank.state is not OPENING:
            raise ProtocolError(f"ACT outcome for bank {bank.index} without an outstanding ACT")
        outcome = bank.outcome
        region = self.geometry.region_of(bank.row)
        if outcome.ok:
            bank.state = OPEN
            bank.opened_at = bank.act_time
            bank.hits = 0
            bank.last_use = t
            if (bank.index, region) in self._nacked:
                self._nacked.discard((bank.index, region))
                self.counts["retries_accepted"] += 1
            return
        if outcome.rejected:
            self.on_nack(bank.index, t)
            return
        # Some chips opened the row and some refused it
        self.counts["nacks"] += 1
        self.counts["partial_acts"] += 1
        self.ledger.on_nack(bank.index, region, t)
        self._nacked.add((bank.index, region))
        waiting = sum(
            1
            for queue in (self.reads[bank.index], self.writes[bank.index])
            for r in queue
            if r.address.region != region
        )
        policy = self.config.divergence_policy.resolve(waiting, self.config.hybrid_threshold)
        bank.state = PARTIAL
        bank.close = policy is DivergencePolicy.PRECHARGE
        bank.retry_at = t + self.timing.ARI_cycles

    def on_nack(self, bank_index, now):
        """Handle a NACK for the outstanding ACT of ``bank_index`` observed at ``now``."""
        bank = self.banks[bank_index]
        if bank.state is not OPENING or bank.act is None:
            raise ProtocolError(f"NACK for bank {bank_index} without an outstanding ACT")
        region = self.geometry.region_of(bank.row)
        self.tracker.retract(bank.act)
        self.ledger.on_nack(bank_index, region, now)
        self._nacked.add((bank_index, region))
        self.counts["nacks"] += 1
        bank.state = CLOSED
        bank.row = None
        bank.act = None
        bank.internal = False

    def _complete(self, request, t):
        request.completed = t
        if request.internal:
            self.counts["scrub_reads"] += 1
        else:
            self.demand_pending -= 1
            self.counts["reads_done"] += 1
        if request.callback is not None:
            request.callback(request, t)

    def _rank_open(self, bank, now):
        if bank.active:
            return
        bank.active = True
        if self._open_banks[bank.rank] == 0:
            self._active_since[bank.rank] = now
        self._open_banks[bank.rank] += 1

    def _rank_close(self, bank, now):
        if not bank.active:
            return
        bank.active = False
        self._open_banks[bank.rank] -= 1
        if self._open_banks[bank.rank] == 0:
            self.active_cycles[bank.rank] += now - self._active_since[bank.rank]

    def background_cycles(self, now):
        """Per rank, cycles spent with at least one row open and cycles with none, up to ``now``."""
        result = []
        for rank, active in enumerate(self.active_cycles):
            if self._open_banks[rank]:
                active += now - self._active_since[rank]
            result.append((active, now - active))
        return result
