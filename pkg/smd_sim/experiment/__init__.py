from smd_sim.experiment.config import AXES, ExperimentConfig
from smd_sim.experiment.report import emit_report, to_csv
from smd_sim.experiment.runner import load_traces, run, sweep
from smd_sim.experiment.system import MemorySystem
