"""What owned nodes see of one query.

Every delivery to an owned node becomes a station. Relays see the previous and
next processing node in the packet header and the body ciphertext. Processors
also peel their head layer, and targets open the body on the way in and out.
Stations with no unowned processor between them are merged into segments;
the adversary reasons about the gaps between consecutive segments.
"""

from collections.abc import Collection

from pydantic import BaseModel, ConfigDict, Field

from onion_wsn.core.exceptions import AuthenticationError, MalformedLayerError
from onion_wsn.core.logger import logger
from onion_wsn.core.models.query import LayerKeys
from onion_wsn.core.netsim.topology import node_of
from onion_wsn.core.netsim.trace import EventKind, Trace, TraceEvent
from onion_wsn.core.onion import open_body, peel
from onion_wsn.core.vm.aggregation import AggregationKind
from onion_wsn.core.vm.carrier import CarrierString
from onion_wsn.core.vm.interpreter import Task
from onion_wsn.core.vm.opcodes import Opcode, decode


def infer_kind(task: Task) -> AggregationKind:
    """Read the aggregation off compiled bytecode.

    VARIANCE and STD fold identically, so both come back as VARIANCE.
    """
    opcodes = {ins.opcode for ins in decode(task.bytecode)}
    if Opcode.MAX in opcodes:
        return AggregationKind.MAX
    if Opcode.MUL in opcodes:
        return AggregationKind.VARIANCE
    return AggregationKind.SUM


class Station(BaseModel):
    """
    One owned node's view of one pass of the query.
    """

    node: int
    processor: bool
    prev: int
    next: int
    body_in: bytes
    body_out: bytes
    time_in: float
    time_out: float
    keys: LayerKeys | None = None
    task: Task | None = None
    w_in: CarrierString | None = None
    w_out: CarrierString | None = None
    event_ids: list[int] = Field(default_factory=list)

    model_config = ConfigDict(frozen=True)

    @property
    def leg_in(self) -> tuple[int, int]:
        return (self.prev, self.node) if self.processor else (self.prev, self.next)

    @property
    def leg_out(self) -> tuple[int, int]:
        return (self.node, self.next) if self.processor else (self.prev, self.next)


class Segment(BaseModel):
    """
    A run of owned stations with no unowned processing node in between.
    """

    stations: list[Station]

    model_config = ConfigDict(frozen=True)

    @property
    def first(self) -> Station:
        return self.stations[0]

    @property
    def last(self) -> Station:
        return self.stations[-1]

    @property
    def prev(self) -> int:
        return self.first.prev

    @property
    def next(self) -> int:
        return self.last.next

    @property
    def body_in(self) -> bytes:
        return self.first.body_in

    @property
    def body_out(self) -> bytes:
        return self.last.body_out

    @property
    def processors(self) -> list[Station]:
        return [station for station in self.stations if station.processor]

    @property
    def w_in(self) -> CarrierString | None:
        """Carrier entering the segment, known when a target sees it before any change."""
        for station in self.processors:
            if station.keys is not None:
                return station.w_in
        return None

    @property
    def w_out(self) -> CarrierString | None:
        """Carrier leaving the segment, known when a target produced the last change."""
        for station in reversed(self.processors):
            if station.keys is not None:
                return station.w_out
        return None

    @property
    def task(self) -> Task | None:
        for station in self.stations:
            if station.task is not None:
                return station.task
        return None

    def is_entry(self, sink: int) -> bool:
        """Only relays on the sink's first leg."""
        return not self.processors and self.prev == sink

    @property
    def event_ids(self) -> list[int]:
        return [event_id for station in self.stations for event_id in station.event_ids]


def _relay_station(event: TraceEvent) -> Station:
    assert event.ip_src is not None and event.ip_dst is not None and event.body is not None
    body = bytes.fromhex(event.body)
    return Station(
        node=event.node,  # type: ignore[arg-type]
        processor=False,
        prev=event.ip_src,
        next=event.ip_dst,
        body_in=body,
        body_out=body,
        time_in=event.time,
        time_out=event.time,
        event_ids=[event.event_id],
    )


def _processor_station(
    arrival: TraceEvent, departure: TraceEvent, private_key: bytes, task_max: int
) -> Station | None:
    assert arrival.head is not None and arrival.body is not None and departure.body is not None
    node = arrival.node
    try:
        peeled = peel(bytes.fromhex(arrival.head), private_key)
    except (AuthenticationError, MalformedLayerError):
        logger.debug("Owned node %s could not peel its layer", node)
        return None
    if peeled.next_hop is None:
        return None

    body_in = bytes.fromhex(arrival.body)
    body_out = bytes.fromhex(departure.body)
    task = w_in = w_out = None
    if peeled.keys is not None:
        opened_in = open_body(body_in, peeled.keys.e_a, task_max)
        opened_out = open_body(body_out, peeled.keys.e_b, task_max)
        task, w_in, w_out = opened_in.task, opened_in.carrier, opened_out.carrier
    return Station(
        node=node,  # type: ignore[arg-type]
        processor=True,
        prev=arrival.ip_src,  # type: ignore[arg-type]
        next=node_of(peeled.next_hop),
        body_in=body_in,
        body_out=body_out,
        time_in=arrival.time,
        time_out=departure.time,
        keys=peeled.keys,
        task=task,
        w_in=w_in,
        w_out=w_out,
        event_ids=[arrival.event_id, departure.event_id],
    )


def observe_query(trace: Trace, query_id: str, owned: Collection[int]) -> list[Station]:
    """Stations of one query in the order the owned nodes saw it."""
    stations: list[Station] = []
    arrivals: dict[int, TraceEvent] = {}
    for event in trace.events_of(query_id):
        if event.node not in owned:
            continue
        if event.kind is EventKind.DELIVER:
            if event.node == event.ip_dst:
                arrivals[event.node] = event
            else:
                stations.append(_relay_station(event))
        elif event.kind is EventKind.PROCESS_END and event.node in arrivals:
            arrival = arrivals.pop(event.node)
            station = _processor_station(
                arrival, event, bytes.fromhex(trace.keyring[event.node]), trace.task_max
            )
            if station is not None:
                stations.append(station)
    return stations


def segments_of(stations: list[Station]) -> list[Segment]:
    """Merge consecutive stations that share a link of the query path."""
    segments: list[list[Station]] = []
    for station in stations:
        if segments and segments[-1][-1].leg_out == station.leg_in:
            segments[-1].append(station)
        else:
            segments.append([station])
    return [Segment(stations=run) for run in segments]
