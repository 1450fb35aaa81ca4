from smd_sim.frontend.cache import LlcModel
from smd_sim.frontend.core import (
    Core,
    CoreConfig,
    classify_mpki,
    core_tick,
    measure_mpki,
    mpki_class,
)
from smd_sim.frontend.mapper import PageMapper, translate
from smd_sim.frontend.synthetic import GENERATORS, generate
from smd_sim.frontend.trace import TraceRecord, parse_trace, read_trace, write_trace
