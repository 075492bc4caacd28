"""An eavesdropper that owns no node and only sees transmissions.

It times how long each node holds a packet: relays forward after the fixed
relay time, processing nodes hold it longer. That reveals the query path, but
with processing delays on it reveals nothing about which path nodes are
targets.
"""

from collections.abc import Iterator

import numpy as np
from pydantic import BaseModel, Field

from onion_wsn.core.adversary.findings import CaseLabel, Claim, Finding
from onion_wsn.core.logger import logger
from onion_wsn.core.netsim.trace import EventKind, Trace, TraceEvent

GAP_EPSILON_S = 1e-6


class NodeVisit(BaseModel):
    """
    A packet arriving at a node and leaving it again.
    """

    query_id: str
    node: int
    gap: float
    deliver_id: int
    transmit_id: int


class ExternalReport(BaseModel):
    findings: list[Finding] = Field(default_factory=list)
    size_channel: list[str] = Field(default_factory=list)
    """
    Queries whose transmissions did not all have the same length.
    """

    visits: int = 0
    """
    Visits to true path nodes.
    """

    misdetections: int = 0
    """
    Queries where the nodes flagged as processing differ from the true path.
    """

    guess_accuracy: float = 0.0
    """
    Accuracy of a coin flip guessing target or decoy per visit.
    """

    gap_accuracy: float = 0.0
    """
    Accuracy of guessing target whenever the hold time is above the median.
    """


def node_visits(trace: Trace, query_id: str) -> Iterator[NodeVisit]:
    pending: dict[int, TraceEvent] = {}
    for event in trace.events_of(query_id):
        if event.kind is EventKind.DELIVER and event.node is not None and event.node != trace.sink:
            pending[event.node] = event
        elif event.kind is EventKind.TRANSMIT and event.src in pending:
            arrival = pending.pop(event.src)
            yield NodeVisit(
                query_id=query_id,
                node=event.src,
                gap=event.time - arrival.time,
                deliver_id=arrival.event_id,
                transmit_id=event.event_id,
            )


def _accuracy(guesses: list[bool], truth: list[bool]) -> float:
    if not truth:
        return 0.0
    return sum(g == t for g, t in zip(guesses, truth)) / len(truth)


def external_view(trace: Trace, rng: np.random.Generator | None = None) -> ExternalReport:
    """Replay `trace` through an eavesdropper and measure what it learns."""
    if not trace.delays_enabled:
        logger.warning("Trace recorded without processing delays; hold times may reveal targets")
    rng = rng or np.random.default_rng(0)
    report = ExternalReport()
    threshold = trace.relay_s + GAP_EPSILON_S
    gaps: list[float] = []
    roles: list[bool] = []

    for truth in trace.queries:
        sizes = {e.size for e in trace.events_of(truth.query_id) if e.kind is EventKind.TRANSMIT}
        if len(sizes) > 1:
            report.size_channel.append(truth.query_id)

        detected: set[int] = set()
        for visit in node_visits(trace, truth.query_id):
            if visit.gap <= threshold:
                continue
            detected.add(visit.node)
            report.findings.append(
                Finding(
                    query_id=truth.query_id,
                    subject=visit.node,
                    claim=Claim.PROCESSED_QUERY,
                    case=CaseLabel.EXTERNAL,
                    evidence_event_ids=[visit.deliver_id, visit.transmit_id],
                )
            )
            if visit.node in truth.path:
                gaps.append(visit.gap)
                roles.append(visit.node in truth.targets)
        if not truth.aborted and detected != set(truth.path):
            report.misdetections += 1

    report.visits = len(roles)
    coin = [bool(flip) for flip in rng.random(len(roles)) < 0.5]
    report.guess_accuracy = _accuracy(coin, roles)
    if gaps:
        cut = float(np.median(gaps))
        report.gap_accuracy = _accuracy([gap > cut for gap in gaps], roles)
    return report
