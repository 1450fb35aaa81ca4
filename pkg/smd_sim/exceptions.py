class ConfigError(Exception):
    """Raised when required config is missing or inconsistent"""


class SimulationFault(Exception):
    """Base class for faults that fail a simulation run"""


class ProtocolError(SimulationFault):
    """Raised when the controller/chip command contract is broken"""


class InvariantViolation(SimulationFault):
    """Raised when a safety invariant of a maintenance mechanism or the controller fails"""


class TraceParseError(ValueError):
    """Raised when a trace line cannot be parsed"""

    def __init__(self, lineno, line, reason="malformed record"):
        self.lineno = lineno
        self.line = line
        super().__init__(f"line {lineno}: {reason}: {line!r}")


class FrameExhaustedError(RuntimeError):
    """Raised when every physical frame has been handed out"""


class RunTimeout(RuntimeError):
    """Raised when a simulation exceeds its wall-clock or cycle budget"""
