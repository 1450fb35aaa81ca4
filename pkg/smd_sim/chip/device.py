import logging
from dataclasses import dataclass

from smd_sim.chip.bank import BankPhase, BankState
from smd_sim.chip.lock import LockRegionTable, LockResult, blocked_subarrays
from smd_sim.exceptions import ProtocolError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Accepted:
    ready_at: int


@dataclass(frozen=True)
class Nacked:
    nack_at: int


class DramChip:
    """Row buffer behaviour shared by every device model.

    Attributes
    ----------
    index: int
        Position of the chip within its rank.
    bank_offset: int
        Global index of this chip's first bank, used to key per-bank statistics.
    listeners: list
        Per bank, objects whose ``on_act(row, now)`` is called for every ACT the
        chip accepts.
    """

    autonomous = False

    def __init__(self, geometry, timing, index=0, bank_offset=0):
        self.geometry = geometry
        self.timing = timing
        self.index = index
        self.bank_offset = bank_offset
        self.banks = [BankState() for _ in range(geometry.banks_per_rank)]
        self.listeners = [[] for _ in self.banks]

    def __repr__(self):
        return f"<{type(self).__name__} index={self.index} banks={len(self.banks)}>"

    def bank_state(self, bank, now):
        state = self.banks[bank]
        state.settle(now)
        return state

    def _open(self, bank, row, now, retry):
        state = self.bank_state(bank, now)
        if state.is_open:
            if retry and state.row == row:
                return Accepted(state.ready_at if state.phase is BankPhase.ACTIVATING else now)
            raise ProtocolError(
                f"ACT to bank {bank} row {row} while row {state.row} is open in chip {self.index}"
            )
        if state.phase is BankPhase.PRECHARGING:
            raise ProtocolError(f"ACT to bank {bank} before its precharge completed")
        return None

    def _activate(self, bank, row, now):
        ready_at = now + self.timing.tRCD
        self.banks[bank].activate(row, now, ready_at)
        for listener in self.listeners[bank]:
            listener.on_act(row, now)
        return Accepted(ready_at)

    def handle_pre(self, bank, now):
        state = self.bank_state(bank, now)
        if state.phase is BankPhase.PRECHARGED:
            return
        if state.phase is BankPhase.PRECHARGING:
            raise ProtocolError(f"PRE to bank {bank} while it is already precharging")
        state.precharge(now + self.timing.tRP)


class SmdChip(DramChip):
    """A Self-Managing DRAM device.

    Maintenance engines lock regions of a bank to work on them. An ACT to a row
    in a subarray blocked by a locked region is rejected with a NACK. REF
    commands are not part of the interface.
    """

    autonomous = True

    def __init__(self, geometry, timing, index=0, bank_offset=0, max_locks_per_bank=1):
        super().__init__(geometry, timing, index=index, bank_offset=bank_offset)
        self.max_locks_per_bank = max_locks_per_bank
        self.locks = [LockRegionTable(geometry.regions_per_bank) for _ in self.banks]
        self.blocked = [
            blocked_subarrays(r, geometry) for r in range(geometry.regions_per_bank)
        ]
        self._blockers = [[] for _ in range(geometry.subarrays_per_bank)]
        for region, subarrays in enumerate(self.blocked):
            for s in subarrays:
                self._blockers[s].append(region)
        # Row held in each locked region's row address latch, per bank
        self.latches = [{} for _ in self.banks]

    def try_lock(self, bank, region, owner, now):
        table = self.locks[bank]
        if table.is_locked(region):
            return LockResult.BUSY_LOCKED
        if table.held >= self.max_locks_per_bank:
            return LockResult.BUSY_BANK
        state = self.bank_state(bank, now)
        if state.row is not None and self.geometry.subarray_of(state.row) in self.blocked[region]:
            return LockResult.BUSY_OPEN_ROW
        table.lock(region, owner)
        return LockResult.LOCKED

    def release(self, bank, region, owner, now):
        self.locks[bank].release(region, owner)
        self.latches[bank].pop(region, None)

    def latch(self, bank, region, row):
        if not self.locks[bank].is_locked(region):
            raise ProtocolError(f"Row {row} latched into unlocked region {region}")
        self.latches[bank][region] = row

    def is_accessible(self, bank, subarray):
        bits = self.locks[bank].bits
        return not any(bits[r] for r in self._blockers[subarray])

    def handle_act(self, bank, row, now, retry=False):
        repeat = self._open(bank, row, now, retry)
        if repeat is not None:
            return repeat
        if not self.is_accessible(bank, self.geometry.subarray_of(row)):
            return Nacked(now + self.timing.T_nack)
        return self._activate(bank, row, now)

    def handle_ref(self, now):
        raise ProtocolError("SMD chips maintain themselves and do not accept REF")


class BaselineChip(DramChip):
    """A conventional DDR4 device, refreshed by controller REF commands."""

    def __init__(self, geometry, timing, index=0, bank_offset=0):
        super().__init__(geometry, timing, index=index, bank_offset=bank_offset)
        self.refresh_pointer = [0] * len(self.banks)

    def handle_act(self, bank, row, now, retry=False):
        repeat = self._open(bank, row, now, retry)
        if repeat is not None:
            return repeat
        return self._activate(bank, row, now)

    def baseline_refresh(self, now, bank=None):
        """Refresh the next rows of every bank, or just ``bank``.

        Returns a mapping of bank to the rows refreshed and the cycle the chip
        becomes available again.
        """
        banks = range(len(self.banks)) if bank is None else [bank]
        per_ref = self.geometry.ref_rows
        rows_per_bank = self.geometry.rows_per_bank
        refreshed = {}
        for b in banks:
            if self.bank_state(b, now).phase is not BankPhase.PRECHARGED:
                raise ProtocolError(f"REF while bank {b} of chip {self.index} is not precharged")
            start = self.refresh_pointer[b]
            refreshed[b] = [(start + i) % rows_per_bank for i in range(per_ref)]
            self.refresh_pointer[b] = (start + per_ref) % rows_per_bank
        return refreshed, now + self.timing.tRFC

    def handle_ref(self, now):
        return self.baseline_refresh(now)


@dataclass(frozen=True)
class ActOutcome:
    """How the chips of a rank answered one ACT."""

    accepted: tuple
    nacked: tuple
    ready_at: int

    @property
    def ok(self):
        return not self.nacked

    @property
    def rejected(self):
        return not self.accepted

    @property
    def partial(self):
        return bool(self.accepted) and bool(self.nacked)


class Rank:
    """The chips behind one chip select.

    The NACK line is shared, so the controller sees a NACK if any chip rejected
    the ACT. In lock-step operation a single chip model stands for all of them.
    """

    def __init__(self, chips, channel=0, rank=0):
        if not chips:
            raise ValueError("A rank needs at least one chip")
        self.chips = list(chips)
        self.channel = channel
        self.rank = rank

    def __repr__(self):
        return f"<Rank channel={self.channel} rank={self.rank} chips={len(self.chips)}>"

    @property
    def autonomous(self):
        return self.chips[0].autonomous

    def handle_act(self, bank, row, now, retry=False):
        accepted, nacked = [], []
        ready_at = now
        for chip in self.chips:
            response = chip.handle_act(bank, row, now, retry=retry)
            if isinstance(response, Nacked):
                nacked.append(chip.index)
            else:
                accepted.append(chip.index)
                ready_at = max(ready_at, response.ready_at)
        return ActOutcome(tuple(accepted), tuple(nacked), ready_at)

    def handle_pre(self, bank, now):
        for chip in self.chips:
            chip.handle_pre(bank, now)

    def handle_ref(self, now):
        """Refresh every chip, returning the rows chip 0 refreshed and when the rank frees up."""
        results = [chip.handle_ref(now) for chip in self.chips]
        return results[0]
