import pytest

from smd_sim.controller import RequestKind
from smd_sim.exceptions import TraceParseError
from smd_sim.frontend import TraceRecord, parse_trace, read_trace, write_trace


def test_parse_record():
    (record,) = parse_trace(["3 0x7f001000 R"])
    assert record == TraceRecord(3, 0x7F001000, RequestKind.READ)
    assert record.instructions == 4
    assert not record.dependent
    assert not record.uncached


def test_parse_empty():
    assert parse_trace([]) == []
    assert parse_trace(["", "# nothing here", "   "]) == []


def test_parse_flags():
    load, store = parse_trace(["0 0x40 R D", "12 0X80 W UD"])
    assert load.dependent and not load.uncached
    assert store.kind is RequestKind.WRITE
    assert store.uncached and store.dependent
    assert store.vaddr == 0x80


def test_bad_line_number():
    with pytest.raises(TraceParseError) as info:
        parse_trace(["x 0x1 R"])
    assert info.value.lineno == 1
    assert info.value.line == "x 0x1 R"
    with pytest.raises(TraceParseError) as info:
        parse_trace(["# header", "", "1 0x40 R", "1 0x40 Q\n"])
    assert info.value.lineno == 4
    assert info.value.line == "1 0x40 Q"


@pytest.mark.parametrize(
    "line",
    [
        "1 0x40",
        "1 0x40 R D U",
        "1 40 R",
        "1 0xZZ R",
        "1 0x40 X",
        "1 0x40 R Q",
        "-1 0x40 R",
        "² 0x40 R",
        "٣ 0x40 R",
    ],
)
def test_malformed(line):
    with pytest.raises(TraceParseError):
        parse_trace([line])


def test_record_text():
    assert TraceRecord(2, 0x40, RequestKind.WRITE, uncached=True).dumps() == "2 0x40 W U"
    assert TraceRecord(0, 0x1000).dumps() == "0 0x1000 R"
    with pytest.raises(ValueError):
        TraceRecord(-1, 0)


@pytest.mark.parametrize("name", ["trace.txt", "trace.txt.gz"])
def test_trace_files(tmp_path, name):
    records = [
        TraceRecord(3, 0x7F001000),
        TraceRecord(0, 0x40, RequestKind.WRITE, dependent=True),
        TraceRecord(7, 0xDEAD000, uncached=True),
    ]
    path = tmp_path / name
    write_trace(records, path)
    assert read_trace(path) == records
