import csv
import io
import logging
import os

from jinja2 import Environment, FileSystemLoader

logger = logging.getLogger(__name__)

COLUMNS = ("experiment", "mechanism", "metric", "value")
FORMATS = ("csv", "svg")

PLOT_WIDTH = 640
PLOT_HEIGHT = 400
MARGIN = 60


def _label(report, axis):
    if axis is None or axis not in report.params:
        return report.experiment
    return f"{report.experiment}[{axis}={report.params[axis]}]"


def _value(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(reports, axis=None):
    """The CSV text of ``reports``, one row per report and metric."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(COLUMNS)
    for report in reports:
        label = _label(report, axis)
        for metric, value in report.metrics():
            writer.writerow((label, report.mode, metric, _value(value)))
    return buffer.getvalue()


def plot_points(reports, axis, metric="throughput"):
    """Scaled ``(x, y, label, value)`` points of ``metric`` along a sweep."""
    values = [
        getattr(r, metric) if metric == "throughput" else dict(r.metrics())[metric] for r in reports
    ]
    low, high = min(values), max(values)
    span = (high - low) or 1
    inner_w = PLOT_WIDTH - 2 * MARGIN
    inner_h = PLOT_HEIGHT - 2 * MARGIN
    step = inner_w / max(len(reports) - 1, 1)
    points = []
    for i, (report, value) in enumerate(zip(reports, values)):
        x = MARGIN + i * step
        y = PLOT_HEIGHT - MARGIN - (value - low) / span * inner_h
        points.append((round(x, 2), round(y, 2), str(report.params.get(axis, i)), value))
    return points


def render_svg(reports, axis, metric="throughput"):
    loader = FileSystemLoader([os.path.join(os.path.dirname(os.path.abspath(__file__)), "templates")])
    environment = Environment(loader=loader, autoescape=True)
    template = environment.get_template("sweep.svg.j2")
    return template.render(
        title=f"{reports[0].experiment} {reports[0].mode}: {metric} by {axis}",
        axis=axis,
        metric=metric,
        width=PLOT_WIDTH,
        height=PLOT_HEIGHT,
        margin=MARGIN,
        points=plot_points(reports, axis, metric),
    )


def emit_report(reports, out_dir, formats=("csv",), axis=None, metric="throughput"):
    """Write ``reports`` to ``out_dir`` and return the paths written.

    The CSV file is always written. An SVG plot of ``metric`` against the
    sweep ``axis`` is added when ``svg`` is requested and ``axis`` is given.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("There are no reports to emit")
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError(f"Unknown report formats {sorted(unknown)}, expected some of {FORMATS}")
    os.makedirs(out_dir, exist_ok=True)
    name = reports[0].experiment
    paths = []
    path = os.path.join(out_dir, f"{name}.csv")
    with open(path, "w", newline="") as f:
        f.write(to_csv(reports, axis))
    paths.append(path)
    if "svg" in formats and axis is not None:
        path = os.path.join(out_dir, f"{name}-{axis}.svg")
        with open(path, "w") as f:
            f.write(render_svg(reports, axis, metric))
        paths.append(path)
    for path in paths:
        logger.info("Wrote %s", path)
    return paths
