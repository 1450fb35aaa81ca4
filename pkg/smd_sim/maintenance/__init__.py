from .base import EventLog, MaintenanceEngine, MaintenanceEvent, MaintenanceJob
from .bloom import BloomFilter, CountingBloomFilter
from .factory import ENGINES, build_engines, mechanisms_for
from .misra_gries import CounterTable
from .refresh import FixedRateRefresh, VariableRefresh
from .rowhammer import (
    CbfRowHammer,
    MisraGriesRowHammer,
    ProbabilisticRowHammer,
    RowHammerOracle,
    VictimRefreshEngine,
)
from .scrub import MemoryScrub
