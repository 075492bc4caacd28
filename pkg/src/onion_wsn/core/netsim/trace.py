"""Simulation traces.

A trace is the ordered event log of one simulation plus the ground truth the
adversary analyses are scored against. Payload bytes are kept as hex: bodies
on every delivery, heads only on deliveries to processing nodes.
"""

from enum import StrEnum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError

from onion_wsn.core.exceptions import TraceFormatError
from onion_wsn.core.vm.aggregation import AggregationKind


class EventKind(StrEnum):
    ANNOUNCE = "announce"
    ISSUE = "issue"
    TRANSMIT = "transmit"
    DELIVER = "deliver"
    PROCESS_START = "process_start"
    PROCESS_END = "process_end"
    RETURN = "return"
    ABORT = "abort"


class TraceEvent(BaseModel):
    """
    One timestamped simulation event.
    """

    event_id: int
    time: float
    kind: EventKind
    query_id: str | None = None
    """
    Hex e_L of the query the event belongs to; a ground-truth label.
    """

    node: int | None = None
    """
    Node where the event happens (receiver for deliveries).
    """

    src: int | None = None
    dst: int | None = None
    """
    Link endpoints of a transmission or delivery.
    """

    ip_src: int | None = None
    ip_dst: int | None = None
    """
    Previous and next processing node, as carried in the packet header.
    """

    size: int = 0
    ref: int | None = None
    """
    For deliveries, the matching transmit event.
    """

    head: str | None = None
    body: str | None = None

    model_config = ConfigDict(frozen=True)


class QueryTruth(BaseModel):
    """
    What actually happened to one query.
    """

    query_id: str
    path: list[int]
    targets: list[int]
    contributions: dict[int, float] = Field(default_factory=dict)
    """
    Reading each target folded into the carrier.
    """

    quantity: str = "temperature"
    kind: AggregationKind = AggregationKind.SUM
    aborted: bool = False


class Trace(BaseModel):
    """
    Event log and ground truth of one simulation.
    """

    sink: int = 0
    delays_enabled: bool = False
    delta_q_ms: float = 50.0
    relay_s: float = 0.0
    entry_mitigation: bool = True
    task_max: int = 1280
    keyring: dict[int, str] = Field(default_factory=dict)
    """
    Private key hex of every sensor node; the sink key is never stored.
    """

    events: list[TraceEvent] = Field(default_factory=list)
    queries: list[QueryTruth] = Field(default_factory=list)

    _by_query: dict[str | None, list[TraceEvent]] | None = PrivateAttr(default=None)

    def events_of(self, query_id: str) -> list[TraceEvent]:
        if self._by_query is None:
            self._by_query = {}
            for event in self.events:
                self._by_query.setdefault(event.query_id, []).append(event)
        return self._by_query.get(query_id, [])

    def truth(self, query_id: str) -> QueryTruth:
        for query in self.queries:
            if query.query_id == query_id:
                return query
        raise KeyError(query_id)


class TraceRecorder:
    """
    Appends events with consecutive ids; a disabled recorder drops them.
    """

    def __init__(self, enabled: bool) -> None:
        self.enabled = enabled
        self.events: list[TraceEvent] = []

    def record(self, time: float, kind: EventKind, **fields: object) -> int | None:
        if not self.enabled:
            return None
        event_id = len(self.events)
        self.events.append(TraceEvent(event_id=event_id, time=time, kind=kind, **fields))  # type: ignore[arg-type]
        return event_id


def write_trace(trace: Trace, path: Path) -> None:
    path.write_text(trace.model_dump_json(), encoding="utf-8")


def read_trace(path: Path) -> Trace:
    """Load a trace written by `write_trace`.

    Raises:
        FileNotFoundError: `path` does not exist.
        TraceFormatError: The file is not a valid trace.
    """
    try:
        return Trace.model_validate_json(path.read_text(encoding="utf-8"))
    except (ValidationError, ValueError) as e:
        raise TraceFormatError(f"{path} is not a valid trace: {e}") from e
