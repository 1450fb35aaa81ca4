import enum
from dataclasses import dataclass
from typing import Any, Callable, Optional


class RequestKind(str, enum.Enum):
    READ = "R"
    WRITE = "W"


@dataclass(eq=False, slots=True)
class MemRequest:
    """A cache line read or write on its way through a memory controller.

    ``core`` is ``None`` for requests the controller makes on its own behalf,
    such as patrol scrub reads. ``callback(request, cycle)`` is called when read
    data returns.
    """

    kind: RequestKind
    paddr: int
    core: Optional[int] = None
    callback: Optional[Callable[[Any, int], None]] = None
    internal: bool = False
    address: Any = None
    bank: int = -1
    row: int = -1
    arrival: int = -1
    seq: int = -1
    issued: Optional[int] = None
    completed: Optional[int] = None

    @property
    def is_read(self):
        return self.kind is RequestKind.READ
