import enum


class BankPhase(enum.Enum):
    PRECHARGED = "precharged"
    ACTIVATING = "activating"
    ACTIVE = "active"
    PRECHARGING = "precharging"


class BankState:
    """Row buffer state of one bank, as driven by controller commands."""

    __slots__ = ("phase", "row", "ready_at", "opened_at")

    def __init__(self):
        self.phase = BankPhase.PRECHARGED
        self.row = None
        self.ready_at = 0
        self.opened_at = None

    def __repr__(self):
        return f"<BankState {self.phase.value} row={self.row} ready_at={self.ready_at}>"

    def settle(self, now):
        if now < self.ready_at:
            return
        if self.phase is BankPhase.ACTIVATING:
            self.phase = BankPhase.ACTIVE
        elif self.phase is BankPhase.PRECHARGING:
            self.phase = BankPhase.PRECHARGED
            self.row = None
            self.opened_at = None

    @property
    def is_open(self):
        return self.phase in (BankPhase.ACTIVATING, BankPhase.ACTIVE)

    def activate(self, row, now, ready_at):
        self.phase = BankPhase.ACTIVATING
        self.row = row
        self.opened_at = now
        self.ready_at = ready_at

    def precharge(self, ready_at):
        self.phase = BankPhase.PRECHARGING
        self.ready_at = ready_at
