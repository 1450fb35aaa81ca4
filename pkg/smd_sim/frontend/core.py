import itertools
import logging
import math
from collections import Counter, deque
from dataclasses import dataclass

from smd_sim.config import SimConfig, section
from smd_sim.controller.request import MemRequest, RequestKind
from smd_sim.exceptions import ConfigError

logger = logging.getLogger(__name__)

# Window entries are one element lists holding the core cycle the entry can retire.
# Non-memory instructions and stores share this one, it is never written to.
_READY = [0]
_WAITING = math.inf

LOW, MEDIUM, HIGH = "low", "medium", "high"


@dataclass(frozen=True)
class CoreConfig:
    width: int = 4
    window: int = 128
    mshrs: int = 8
    hit_latency: int = 20
    core_clock_mhz: int = 4000
    line_size: int = 64

    def __post_init__(self):
        if min(self.width, self.window, self.mshrs, self.core_clock_mhz) < 1:
            raise ConfigError("Core width, window, MSHRs and clock must be positive")
        if self.hit_latency < 0:
            raise ConfigError("LLC hit latency cannot be negative")

    @classmethod
    def from_config(cls, config=None, **overrides):
        cfg = section("frontend") if config is None else SimConfig(config)
        values = dict(
            width=cfg.get("width", 4),
            window=cfg.get("window", 128),
            mshrs=cfg.get("mshrs", 8),
            hit_latency=cfg.get("llc.hit_latency", 20),
            core_clock_mhz=cfg.get("core_clock_mhz", 4000),
            line_size=cfg.get("llc.line_size", 64),
        )
        values.update(overrides)
        return cls(**values)


class Core:
    """A limit-based out-of-order core replaying a trace.

    Each core cycle the core retires up to ``width`` instructions from the head
    of its window, in order, and then fills the window with up to ``width`` new
    instructions. Non-memory instructions are ready at once, LLC hits after the
    hit latency and loads that miss when their line returns from memory. Stores
    retire without waiting. A miss needs a free MSHR and room in the controller
    queue, otherwise the core stalls until the next cycle. Dirty lines evicted
    from the LLC are written back through the same queue.

    Parameters
    ----------
    core_id: int
    records: list of TraceRecord
        Replayed from the start again when exhausted.
    llc: LlcModel
        Possibly shared with other cores.
    mapper: PageMapper
    send: callable
        ``send(request, bus_cycle) -> bool`` hands a request to the memory
        controller, ``False`` when its queue is full.
    config: CoreConfig
    target: int
        Retired instruction count at which ``finish_cycle`` is recorded.
    bus_clock_mhz: int
        Memory bus clock, used to convert response times to core cycles.
    """

    def __init__(
        self,
        core_id,
        records,
        llc,
        mapper,
        send,
        config=None,
        target=None,
        bus_clock_mhz=1600,
    ):
        if not records:
            raise ConfigError(f"Core {core_id} has an empty trace")
        self.core_id = core_id
        self.records = records
        self.llc = llc
        self.mapper = mapper
        self.send = send
        self.config = config = CoreConfig() if config is None else config
        self.target = target
        self.bus_clock_mhz = bus_clock_mhz
        self.window = deque()
        self.mshr = {}
        self.pending_writebacks = deque()
        self.pos = 0
        self.bubbles_left = records[0].bubbles
        self.wraps = 0
        self.retired = 0
        self.finish_cycle = None
        self.requests = 0
        self.responses = 0
        self.writebacks = 0
        self.stalls = Counter()
        self._last_load = _READY

    def __repr__(self):
        return f"<Core {self.core_id} retired={self.retired} outstanding={len(self.mshr)}>"

    @property
    def done(self):
        return self.finish_cycle is not None

    @property
    def outstanding(self):
        return len(self.mshr)

    @property
    def ipc(self):
        if not self.finish_cycle:
            return None
        return self.target / self.finish_cycle

    def warm(self, instructions):
        """Run ``instructions`` through the LLC functionally, without timing."""
        count = 0
        line_size = self.config.line_size
        while count < instructions:
            record = self.records[self.pos]
            count += record.instructions
            if not record.uncached:
                line = self.mapper.translate(record.vaddr, self.core_id) // line_size
                self.llc.access(line, record.kind is RequestKind.WRITE)
            self._advance()
        self.bubbles_left = self.records[self.pos].bubbles
        return count

    def tick(self, now, bus_now):
        """Simulate core cycle ``now``, ``bus_now`` being the current bus cycle.

        Returns the number of instructions retired.
        """
        window = self.window
        width = self.config.width
        retired = 0
        while retired < width and window and window[0][0] <= now:
            window.popleft()
            retired += 1
        if retired:
            self.retired += retired
            if (
                self.finish_cycle is None
                and self.target is not None
                and self.retired >= self.target
            ):
                self.finish_cycle = now

        while self.pending_writebacks:
            line = self.pending_writebacks[0]
            request = MemRequest(RequestKind.WRITE, line * self.config.line_size, core=self.core_id)
            if not self.send(request, bus_now):
                break
            self.pending_writebacks.popleft()
            self.writebacks += 1

        depth = self.config.window
        inserted = 0
        while inserted < width:
            room = depth - len(window)
            if room <= 0:
                self.stalls["window"] += 1
                break
            if self.bubbles_left:
                n = min(self.bubbles_left, width - inserted, room)
                window.extend(itertools.repeat(_READY, n))
                self.bubbles_left -= n
                inserted += n
                continue
            if not self._insert_memory(now, bus_now):
                break
            inserted += 1
        return retired

    def _insert_memory(self, now, bus_now):
        record = self.records[self.pos]
        if record.dependent and self._last_load[0] > now:
            self.stalls["dependency"] += 1
            return False
        line_size = self.config.line_size
        line = self.mapper.translate(record.vaddr, self.core_id) // line_size
        write = record.kind is RequestKind.WRITE
        waiters = self.mshr.get(line)

        if record.uncached or (waiters is None and not self.llc.contains(line)):
            if waiters is None:
                if len(self.mshr) >= self.config.mshrs:
                    self.stalls["mshr"] += 1
                    return False
                request = MemRequest(
                    RequestKind.READ,
                    line * line_size,
                    core=self.core_id,
                    callback=self.on_response,
                )
                if not self.send(request, bus_now):
                    self.stalls["queue"] += 1
                    return False
                waiters = self.mshr[line] = []
                self.requests += 1
            if not record.uncached:
                self._touch(line, write)
            entry = _READY if write else [_WAITING]
            if not write:
                waiters.append(entry)
        elif waiters is not None:
            # Line already on its way, merge with the outstanding miss
            self._touch(line, write)
            entry = _READY if write else [_WAITING]
            if not write:
                waiters.append(entry)
        else:
            self._touch(line, write)
            entry = _READY if write else [now + self.config.hit_latency]

        self.window.append(entry)
        if not write:
            self._last_load = entry
        self._advance()
        self.bubbles_left = self.records[self.pos].bubbles
        return True

    def _touch(self, line, write):
        _, victim = self.llc.access(line, write)
        if victim is not None:
            self.pending_writebacks.append(victim)

    def _advance(self):
        self.pos += 1
        if self.pos == len(self.records):
            self.pos = 0
            self.wraps += 1

    def on_response(self, request, bus_cycle):
        """Wake every load waiting for the line of ``request``, which returned at ``bus_cycle``."""
        ready = -(-bus_cycle * self.config.core_clock_mhz // self.bus_clock_mhz)
        line = request.paddr // self.config.line_size
        for entry in self.mshr.pop(line, ()):
            entry[0] = ready
        self.responses += 1


def core_tick(core, now, bus_now):
    return core.tick(now, bus_now)


def mpki_class(mpki):
    """Memory intensity group of a misses-per-kilo-instruction figure."""
    if mpki < 1:
        return LOW
    if mpki < 10:
        return MEDIUM
    return HIGH


def measure_mpki(records, llc, mapper, instructions=None, line_size=64):
    """LLC misses per thousand instructions over ``instructions`` of ``records``.

    ``llc`` should already be warmed. One pass over the trace when
    ``instructions`` is not given.
    """
    if not records:
        raise ValueError("Cannot measure the MPKI of an empty trace")
    if instructions is None:
        instructions = sum(r.instructions for r in records)
    misses = count = 0
    for record in itertools.cycle(records):
        if count >= instructions:
            break
        count += record.instructions
        if record.uncached:
            misses += 1
            continue
        hit, _ = llc.access(mapper.translate(record.vaddr) // line_size, record.kind is RequestKind.WRITE)
        misses += not hit
    return 1000 * misses / count


def classify_mpki(records, llc, mapper, instructions=None, line_size=64):
    return mpki_class(measure_mpki(records, llc, mapper, instructions, line_size))
