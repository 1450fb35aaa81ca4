from smd_sim.energy.model import EnergyAccumulator, EnergyConfig, account, command_energy
from smd_sim.energy.stats import (
    MaintenanceStats,
    RefreshTracker,
    StatsReport,
    speedup,
    weighted_speedup,
)
