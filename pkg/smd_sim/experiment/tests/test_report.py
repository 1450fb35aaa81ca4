import csv
import io

import pytest

from smd_sim.energy import StatsReport
from smd_sim.experiment import emit_report, to_csv
from smd_sim.experiment.report import COLUMNS, plot_points


def report(ipc, **params):
    return StatsReport(
        experiment="drp",
        mode="smd-drp",
        seed=0,
        cycles=1000,
        ipc=[ipc],
        mpki=[12.5],
        energy={"act": 1700, "background": 300},
        commands={"act": 1, "rd": 2},
        params=params,
    )


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_csv_single_report():
    (header, *body) = rows(to_csv([report(0.5)]))
    assert tuple(header) == COLUMNS
    assert body[0] == ["drp", "smd-drp", "cycles", "1000"]
    assert ["drp", "smd-drp", "ipc.core0", "0.5"] in body
    assert ["drp", "smd-drp", "energy_pj.total", "2000"] in body
    assert body[-1] == ["drp", "smd-drp", "faults", "0"]


def test_csv_sweep_labels():
    reports = [report(0.5, act_max=a) for a in (256, 512, 1024)]
    labels = {row[0] for row in rows(to_csv(reports, "act_max"))[1:]}
    assert labels == {"drp[act_max=256]", "drp[act_max=512]", "drp[act_max=1024]"}


def test_plot_points():
    reports = [report(0.5, act_max=256), report(1.0, act_max=512), report(0.75, act_max=1024)]
    points = plot_points(reports, "act_max")
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    assert xs == sorted(xs)
    # Higher throughput is drawn higher up
    assert ys[1] < ys[2] < ys[0]
    assert [p[2] for p in points] == ["256", "512", "1024"]
    assert [p[3] for p in points] == [0.5, 1.0, 0.75]


def test_emit_csv(tmp_path):
    (path,) = emit_report([report(0.5)], str(tmp_path / "out"))
    assert path.endswith("drp.csv")
    with open(path) as f:
        assert f.read() == to_csv([report(0.5)])


def test_emit_sweep_with_plot(tmp_path):
    reports = [report(0.5, act_max=a) for a in (256, 512, 1024)]
    paths = emit_report(reports, str(tmp_path), formats=("csv", "svg"), axis="act_max")
    assert [p.rsplit("/", 1)[-1] for p in paths] == ["drp.csv", "drp-act_max.svg"]
    with open(paths[1]) as f:
        svg = f.read()
    assert svg.startswith("<svg")
    assert svg.count("<circle") == 3
    assert "drp smd-drp: throughput by act_max" in svg


def test_emit_svg_needs_axis(tmp_path):
    paths = emit_report([report(0.5)], str(tmp_path), formats=("csv", "svg"))
    assert len(paths) == 1


def test_emit_rejects(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], str(tmp_path))
    with pytest.raises(ValueError, match="Unknown report formats"):
        emit_report([report(0.5)], str(tmp_path), formats=("pdf",))
