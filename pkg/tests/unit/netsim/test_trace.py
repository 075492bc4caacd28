from pathlib import Path

import pytest

from onion_wsn.core.exceptions import TraceFormatError
from onion_wsn.core.netsim.trace import EventKind, QueryTruth, Trace, TraceRecorder, read_trace, write_trace


def _trace() -> Trace:
    recorder = TraceRecorder(enabled=True)
    recorder.record(0.0, EventKind.ANNOUNCE, node=3)
    recorder.record(1.0, EventKind.ISSUE, query_id="aa", node=0)
    recorder.record(1.5, EventKind.ISSUE, query_id="bb", node=0)
    recorder.record(2.0, EventKind.RETURN, query_id="aa", node=0)
    return Trace(
        keyring={3: "00" * 32},
        events=recorder.events,
        queries=[
            QueryTruth(query_id="aa", path=[3, 4], targets=[3], contributions={3: 21.0}),
            QueryTruth(query_id="bb", path=[4, 3], targets=[]),
        ],
    )


@pytest.mark.unit
def test_recorder_numbers_events() -> None:
    trace = _trace()
    assert [e.event_id for e in trace.events] == [0, 1, 2, 3]


@pytest.mark.unit
def test_disabled_recorder_drops_events() -> None:
    recorder = TraceRecorder(enabled=False)
    assert recorder.record(0.0, EventKind.ISSUE, query_id="aa") is None
    assert recorder.events == []


@pytest.mark.unit
def test_events_grouped_by_query() -> None:
    trace = _trace()
    assert [e.kind for e in trace.events_of("aa")] == [EventKind.ISSUE, EventKind.RETURN]
    assert trace.events_of("cc") == []


@pytest.mark.unit
def test_truth_lookup() -> None:
    trace = _trace()
    assert trace.truth("aa").contributions == {3: 21.0}
    with pytest.raises(KeyError):
        trace.truth("cc")


@pytest.mark.unit
def test_trace_file_keeps_integer_node_keys(tmp_path: Path) -> None:
    # Arrange
    path = tmp_path / "trace.json"

    # Act
    write_trace(_trace(), path)
    loaded = read_trace(path)

    # Assert
    assert loaded.keyring == {3: "00" * 32}
    assert loaded.truth("aa").contributions == {3: 21.0}
    assert loaded.events_of("bb")[0].time == 1.5


@pytest.mark.unit
def test_malformed_trace(tmp_path: Path) -> None:
    path = tmp_path / "trace.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(TraceFormatError):
        read_trace(path)


@pytest.mark.unit
def test_missing_trace(tmp_path: Path) -> None:
    with pytest.raises(FileNotFoundError):
        read_trace(tmp_path / "absent.json")
