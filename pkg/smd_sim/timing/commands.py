import enum
from dataclasses import dataclass


class CommandKind(str, enum.Enum):
    ACT = "ACT"
    PRE = "PRE"
    RD = "RD"
    WR = "WR"
    REF = "REF"
    NOP = "NOP"


@dataclass(frozen=True)
class Address:
    """A DRAM location, down to the column.

    ``bank`` counts within its bank group. ``region`` and ``subarray`` are derived
    from ``row`` by the geometry and carried along for logging and checks.
    """

    channel: int = 0
    rank: int = 0
    bankgroup: int = 0
    bank: int = 0
    region: int = 0
    subarray: int = 0
    row: int = 0
    column: int = 0


@dataclass(frozen=True)
class Command:
    kind: CommandKind
    target: Address
    issue_time: int
    nacked: bool = False

    def dumps(self):
        a = self.target
        line = (
            f"{self.issue_time} {self.kind.value} {a.channel} {a.rank} {a.bankgroup} "
            f"{a.bank} {a.region} {a.subarray} {a.row} {a.column}"
        )
        return line + " NACK" if self.nacked else line

    @classmethod
    def loads(cls, line):
        fields = line.split()
        if len(fields) not in (10, 11) or (len(fields) == 11 and fields[10] != "NACK"):
            raise ValueError(f"Malformed command line {line!r}")
        address = Address(*(int(f) for f in fields[2:10]))
        return cls(
            CommandKind(fields[1]), address, int(fields[0]), nacked=len(fields) == 11
        )
