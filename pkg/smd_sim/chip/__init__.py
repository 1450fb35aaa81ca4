from .bank import BankPhase, BankState
from .device import Accepted, ActOutcome, BaselineChip, DramChip, Nacked, Rank, SmdChip
from .geometry import Geometry
from .lock import LockRegionTable, LockResult, blocked_subarrays
