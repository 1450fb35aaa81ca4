import logging

import dask

from smd_sim.exceptions import ConfigError
from smd_sim.experiment.system import MemorySystem
from smd_sim.frontend import generate, read_trace

logger = logging.getLogger(__name__)


def load_traces(config):
    """One list of ``TraceRecord`` per core.

    Trace files come first, then synthetic generators, and cores take them
    in turn. A generator used by several cores gets a different seed for each.
    """
    files = list(config.get("experiment.traces") or [])
    synthetic = list(config.get("experiment.synthetic") or [])
    sources = [("file", path) for path in files] + [("synthetic", spec) for spec in synthetic]
    if not sources:
        raise ConfigError("No traces or synthetic trace generators configured")
    loaded = {}
    traces = []
    for core in range(config.get("experiment.cores", 1)):
        kind, source = sources[core % len(sources)]
        if kind == "file":
            if source not in loaded:
                loaded[source] = read_trace(source)
                logger.debug("Read %d records from %s", len(loaded[source]), source)
            traces.append(loaded[source])
        else:
            params = dict(source)
            name = params.pop("kind", None)
            seed = params.pop("seed", config.seed) + core
            traces.append(generate(name, seed=seed, **params))
    return traces


def run(config, traces=None):
    """Simulate ``config`` and return its ``StatsReport``.

    Multi-core runs also simulate each trace alone in the same mode to report
    the weighted speedup, unless ``experiment.compute_alone`` is off.
    """
    config.validate()
    if traces is None:
        traces = load_traces(config)
    report = MemorySystem(config, traces).run()
    if len(traces) > 1 and config.get("experiment.compute_alone", True):
        alone = config.set("experiment.dump_commands", None)
        report.ipc_alone = [MemorySystem(alone, [records]).run().ipc[0] for records in traces]
    return report


def _run_point(config, traces, axis, value):
    report = run(config, traces)
    report.params[axis] = value
    return report


def _client(scheduler):
    try:
        from distributed import Client
    except ImportError as e:
        msg = (
            "Sweeping on a dask cluster needs distributed.\n\n"
            "Please ensure that the following packages are installed:\n\n"
            "  pip install smd-sim[distributed]\n"
        )
        raise ImportError(msg) from e
    return Client(scheduler)


def sweep(config, axis, values, scheduler="sync"):
    """Run ``config`` once per value of ``axis``, all with the same seed and traces.

    Points are independent ``dask.delayed`` tasks computed with ``scheduler``:
    ``sync``, ``threads``, ``processes`` or the address of a distributed scheduler.
    """
    values = list(values)
    if not values:
        raise ConfigError(f"No values given for sweep axis {axis!r}")
    points = [config.with_axis(axis, value) for value in values]
    for point in points:
        point.validate()
    traces = load_traces(config)
    tasks = [dask.delayed(_run_point)(point, traces, axis, v) for point, v in zip(points, values)]
    logger.info("Sweeping %s over %s in mode %s", axis, values, config.mode)
    if scheduler in ("sync", "synchronous", "threads", "processes"):
        return list(dask.compute(*tasks, scheduler=scheduler))
    with _client(scheduler) as client:
        return list(dask.compute(*tasks, scheduler=client))
