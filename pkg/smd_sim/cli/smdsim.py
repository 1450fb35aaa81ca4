import logging
import sys

import click

from smd_sim.chip import Geometry
from smd_sim.exceptions import ConfigError, SimulationFault, TraceParseError
from smd_sim.experiment import AXES, ExperimentConfig, emit_report, run, sweep
from smd_sim.frontend import GENERATORS, generate, write_trace
from smd_sim.maintenance.calculators import (
    act_trefw,
    act_trefw_from_counters,
    cbf_bits,
    counter_table_bits,
    drp_required_counters,
    mrt_bits,
    scrub_row_cycles,
    scrub_row_latency,
    vr_factor,
)
from smd_sim.timing import TimingParams, check_stream
from smd_sim.utils.logs import CommandLog

logger = logging.getLogger(__name__)


config_option = click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Experiment YAML file",
)
trace_option = click.option(
    "--trace",
    "traces",
    multiple=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Trace file, may be repeated",
)
out_option = click.option(
    "--out",
    type=click.Path(file_okay=False),
    default=".",
    help="Output directory (default .)",
)


def _usage_error(e):
    ctx = click.get_current_context()
    logger.error(str(e) + "\n")
    click.echo(ctx.get_help())
    sys.exit(1)


def _parse_value(text):
    text = text.strip()
    for convert in (int, float):
        try:
            return convert(text)
        except ValueError:
            pass
    return text


def _experiment(config, mode, seed, traces, cores, instructions, dump_commands):
    cfg = ExperimentConfig.from_file(config) if config else ExperimentConfig()
    if mode is not None:
        cfg = cfg.set("experiment.mode", mode)
    if seed is not None:
        cfg = cfg.set("experiment.seed", seed)
    if traces:
        cfg = cfg.set("experiment.traces", list(traces)).set("experiment.synthetic", [])
    if cores is not None:
        cfg = cfg.set("experiment.cores", cores)
    if instructions is not None:
        cfg = cfg.set("experiment.run_instructions", instructions)
    if dump_commands is not None:
        cfg = cfg.set("experiment.dump_commands", dump_commands)
    return cfg


def _finish(reports):
    faults = [f for report in reports for f in report.faults]
    if faults:
        logger.error("%d faults found, the run failed", len(faults))
        sys.exit(2)


@click.group()
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default="INFO",
    help="Logging level (default INFO)",
)
def main(log_level):
    """Simulate self-managing DRAM and its baselines."""
    logging.basicConfig(
        format="%(asctime)s %(name)s %(levelname)s %(message)s", level=log_level.upper()
    )


@main.command("run")
@config_option
@trace_option
@click.option("--mode", type=str, default=None, help="Operating mode, e.g. ddr4 or smd-fr")
@click.option("--seed", type=int, default=None, help="Random seed")
@click.option("--cores", type=int, default=None, help="Number of cores")
@click.option("--instructions", type=int, default=None, help="Instructions each core retires")
@click.option(
    "--dump-commands",
    type=click.Path(dir_okay=False),
    default=None,
    help="Write the command log here, .gz to compress",
)
@out_option
def run_command(config, traces, mode, seed, cores, instructions, dump_commands, out):
    """Run one experiment and write its CSV report."""
    try:
        cfg = _experiment(config, mode, seed, traces, cores, instructions, dump_commands)
        report = run(cfg)
    except (ConfigError, TraceParseError) as e:
        _usage_error(e)
    except SimulationFault as e:
        logger.error(str(e))
        sys.exit(2)
    emit_report([report], out)
    _finish([report])


@main.command("sweep")
@config_option
@click.option("--axis", type=click.Choice(sorted(AXES)), required=True, help="Parameter to sweep")
@click.option(
    "--values", type=str, required=True, help="Comma separated values, e.g. '32 ms,16 ms,8 ms'"
)
@trace_option
@click.option("--mode", type=str, default=None, help="Operating mode")
@click.option("--seed", type=int, default=None, help="Random seed")
@click.option("--cores", type=int, default=None, help="Number of cores")
@click.option("--instructions", type=int, default=None, help="Instructions each core retires")
@click.option(
    "--scheduler",
    type=str,
    default="sync",
    help="sync, processes or the address of a dask scheduler (default sync)",
)
@out_option
@click.option("--plot/--no-plot", default=True, help="Also write an SVG plot (default on)")
def sweep_command(
    config, axis, values, traces, mode, seed, cores, instructions, scheduler, out, plot
):
    """Run one experiment per value of a parameter."""
    try:
        cfg = _experiment(config, mode, seed, traces, cores, instructions, None)
        reports = sweep(cfg, axis, [_parse_value(v) for v in values.split(",")], scheduler)
    except (ConfigError, TraceParseError) as e:
        _usage_error(e)
    except SimulationFault as e:
        logger.error(str(e))
        sys.exit(2)
    emit_report(reports, out, formats=("csv", "svg") if plot else ("csv",), axis=axis)
    _finish(reports)


@main.command("check")
@click.argument("log", type=click.Path(exists=True, dir_okay=False))
@config_option
def check_command(log, config):
    """Check a dumped command log against the timing rules."""
    try:
        cfg = ExperimentConfig.from_file(config) if config else ExperimentConfig()
        timing = TimingParams.from_config(cfg.section("timing"))
        commands = CommandLog.read(log)
    except (ConfigError, ValueError) as e:
        _usage_error(e)
    violations = check_stream(commands, timing)
    for violation in violations:
        click.echo(str(violation))
    click.echo(f"{len(commands)} commands, {len(violations)} violations")
    if violations:
        sys.exit(2)


@main.group("calc")
def calc():
    """Derived parameters of the maintenance mechanisms."""


@calc.command("vr-factor")
@click.option("--rt", default="128 ms", help="Weak row retention time (default 128 ms)")
@click.option("--period", default="32 ms", help="Refresh period (default 32 ms)")
def calc_vr_factor(rt, period):
    """Refresh periods a strong row may skip between refreshes."""
    try:
        click.echo(vr_factor(rt, period))
    except ConfigError as e:
        _usage_error(e)


@calc.command("drp-counters")
@click.option("--act-max", type=int, default=512, help="RowHammer threshold (default 512)")
@click.option(
    "--act-trefw",
    "activations",
    type=int,
    default=None,
    help="Activations per window, derived from the timing when unset",
)
@click.option(
    "--from-counters",
    type=int,
    default=None,
    help="Back-solve activations per window from a known table size",
)
@click.option("--period", default=None, help="Refresh period used to derive activations per window")
def calc_drp_counters(act_max, activations, from_counters, period):
    """Counters per bank for deterministic RowHammer protection."""
    timing = TimingParams.from_config()
    if period is not None:
        timing = timing.with_refresh_period(period)
    if from_counters is not None:
        activations = act_trefw_from_counters(from_counters, act_max)
        click.echo(f"act_trefw: {activations}")
    if activations is None:
        activations = act_trefw(timing)
    counters = drp_required_counters(timing, act_max, activations)
    click.echo(f"counters: {counters}")
    geometry = Geometry.from_config()
    click.echo(f"storage_bits: {counter_table_bits(counters, geometry, act_max)}")


@calc.command("scrub-latency")
@click.option("--errors", type=int, default=0, help="Codewords with errors (default 0)")
@click.option("--codewords", type=int, default=128, help="Codewords per row (default 128)")
def calc_scrub_latency(errors, codewords):
    """Time to scrub one row."""
    timing = TimingParams.from_config()
    click.echo(f"cycles: {scrub_row_cycles(timing, errors, codewords)}")
    click.echo(f"ns: {scrub_row_latency(timing, errors, codewords)}")


@calc.command("mrt-bits")
@click.option("--cbf-size", type=int, default=1024, help="Counting Bloom filter size (default 1024)")
def calc_mrt_bits(cbf_size):
    """Per bank storage of the RowHammer mechanisms."""
    geometry = Geometry.from_config()
    click.echo(f"mrt_bits: {mrt_bits(geometry)}")
    click.echo(f"cbf_bits: {cbf_bits(cbf_size)}")


@main.command("trace")
@click.argument("kind", type=click.Choice(sorted(GENERATORS)))
@click.option(
    "--out", type=click.Path(dir_okay=False), required=True, help="Output path, .gz to compress"
)
@click.option("--records", type=int, default=20000, help="Memory instructions (default 20000)")
@click.option("--bubbles", type=int, default=None, help="Non-memory instructions before each access")
@click.option("--seed", type=int, default=0, help="Random seed (default 0)")
def trace_command(kind, out, records, bubbles, seed):
    """Write a synthetic trace."""
    params = {"records": records}
    if bubbles is not None:
        params["bubbles"] = bubbles
    try:
        records = generate(kind, seed=seed, **params)
    except ConfigError as e:
        _usage_error(e)
    write_trace(records, out)
    click.echo(f"Wrote {len(records)} records to {out}")


def go():
    main()


if __name__ == "__main__":
    go()
