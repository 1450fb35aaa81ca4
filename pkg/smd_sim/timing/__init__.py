from .commands import Address, Command, CommandKind
from .params import TimingParams, cycles_to_ns, ns_to_cycles
from .rules import Relation, TimingTracker, Violation, check_stream, min_gap, relation
