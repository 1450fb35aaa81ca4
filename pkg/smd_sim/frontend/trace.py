import gzip
from dataclasses import dataclass

from smd_sim.controller.request import RequestKind
from smd_sim.exceptions import TraceParseError

FLAGS = frozenset("DU")


@dataclass(frozen=True, slots=True)
class TraceRecord:
    """One memory instruction and the non-memory instructions before it.

    ``dependent`` loads wait for the previous load's data before issuing.
    ``uncached`` accesses bypass the LLC, as a flushed line would.
    """

    bubbles: int
    vaddr: int
    kind: RequestKind = RequestKind.READ
    dependent: bool = False
    uncached: bool = False

    def __post_init__(self):
        if self.bubbles < 0 or self.vaddr < 0:
            raise ValueError("Bubble counts and addresses cannot be negative")

    @property
    def instructions(self):
        return self.bubbles + 1

    def dumps(self):
        flags = ("D" if self.dependent else "") + ("U" if self.uncached else "")
        line = f"{self.bubbles} {self.vaddr:#x} {self.kind.value}"
        return f"{line} {flags}" if flags else line


def parse_trace(lines):
    """Parse ``bubbles 0xVADDR R|W [flags]`` lines into ``TraceRecord`` objects.

    Blank lines and lines starting with ``#`` are skipped.
    """
    records = []
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        fields = text.split()
        if len(fields) not in (3, 4):
            raise TraceParseError(lineno, line.rstrip("\n"), "expected 3 or 4 fields")
        bubbles, vaddr, kind = fields[:3]
        flags = fields[3] if len(fields) == 4 else ""
        if not (bubbles.isascii() and bubbles.isdigit()):
            raise TraceParseError(lineno, line.rstrip("\n"), "bad bubble count")
        if not vaddr.lower().startswith("0x"):
            raise TraceParseError(lineno, line.rstrip("\n"), "address must be hexadecimal")
        try:
            address = int(vaddr, 16)
        except ValueError:
            raise TraceParseError(lineno, line.rstrip("\n"), "bad address") from None
        if kind not in ("R", "W"):
            raise TraceParseError(lineno, line.rstrip("\n"), "kind must be R or W")
        if not set(flags) <= FLAGS:
            raise TraceParseError(lineno, line.rstrip("\n"), "unknown flags")
        records.append(
            TraceRecord(
                int(bubbles),
                address,
                RequestKind(kind),
                dependent="D" in flags,
                uncached="U" in flags,
            )
        )
    return records


def _open(path, mode):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def read_trace(path):
    with _open(path, "r") as f:
        return parse_trace(f)


def write_trace(records, path):
    with _open(path, "w") as f:
        for record in records:
            f.write(record.dumps() + "\n")
