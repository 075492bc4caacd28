"""Conclusions an adversary draws from the nodes it owns.

Between two consecutive owned segments of a query there are one or more
unowned processing nodes. Each segment knows the processing node right after
it and right before it. When both name the same node exactly one node is
confined; otherwise two or more are. Equal body ciphertext on both sides means
nobody in between re-encrypted, so everybody in between is a decoy.
"""

from collections.abc import Collection, Iterator
from itertools import pairwise

from pydantic import ValidationError

from onion_wsn.core.adversary.findings import (
    AdversaryConfig,
    AdversaryPolicy,
    CaseLabel,
    Claim,
    Finding,
    dedupe,
)
from onion_wsn.core.adversary.observations import Segment, infer_kind, observe_query, segments_of
from onion_wsn.core.exceptions import ConfigError
from onion_wsn.core.netsim.trace import Trace
from onion_wsn.core.vm.aggregation import AggregationKind, initial_carrier
from onion_wsn.core.vm.assembler import referenced_quantities
from onion_wsn.core.vm.carrier import CarrierString, exact_sum

_B_CASES = (CaseLabel.B_I, CaseLabel.B_II, CaseLabel.B_III)


def reading_from_diff(
    kind: AggregationKind, before: CarrierString, after: CarrierString
) -> float | None:
    """The one reading folded in between two carriers, when it can be told apart."""
    if after.count - before.count != 1:
        return None
    if kind is AggregationKind.MAX:
        return after.acc1 if after.acc1 > before.acc1 else None
    return exact_sum((after.acc1, after.comp1, -before.acc1, -before.comp1))


def _mixed(trace: Trace, query_id: str, g1: Segment, g2: Segment) -> bool:
    """Another query touched either owned node while this one was between them."""
    nodes = {g1.last.node, g2.first.node}
    start, end = g1.last.time_out, g2.first.time_in
    return any(
        e.query_id not in (None, query_id) and e.node in nodes and start < e.time < end
        for e in trace.events
    )


def _route_findings(
    trace: Trace, query_id: str, segments: list[Segment], owned: Collection[int]
) -> Iterator[Finding]:
    for segment in segments:
        for station in segment.stations:
            for subject in (station.prev, station.next):
                if subject != trace.sink and subject not in owned:
                    yield Finding(
                        query_id=query_id,
                        subject=subject,
                        claim=Claim.PROCESSED_QUERY,
                        case=CaseLabel.ROUTE,
                        evidence_event_ids=station.event_ids,
                    )


def _gap_findings(
    trace: Trace, query_id: str, g1: Segment, g2: Segment, policy: AdversaryPolicy
) -> Iterator[Finding]:
    x1, x2 = g1.next, g2.prev
    if trace.sink in (x1, x2):
        return
    same = g1.body_out == g2.body_in
    evidence = g1.last.event_ids + g2.first.event_ids

    if x1 != x2:
        if same:
            for subject in (x1, x2):
                yield Finding(
                    query_id=query_id,
                    subject=subject,
                    claim=Claim.IS_DECOY,
                    case=CaseLabel.A,
                    evidence_event_ids=evidence,
                )
        return

    entry = g1.is_entry(trace.sink)
    known = (g1.w_out is not None) + (g2.w_in is not None)
    case = CaseLabel.ENTRY if entry else _B_CASES[known]
    suspected = policy is AdversaryPolicy.MIXING_AWARE and _mixed(trace, query_id, g1, g2)

    def finding(claim: Claim, **fields: object) -> Finding:
        return Finding(
            query_id=query_id,
            subject=x1,
            claim=claim,
            case=case,
            suspected=suspected,
            evidence_event_ids=evidence,
            **fields,  # type: ignore[arg-type]
        )

    if same:
        yield finding(Claim.IS_DECOY)
        return
    yield finding(Claim.IS_TARGET)

    task = g1.task or g2.task
    if task is None:
        return
    yield finding(Claim.QUANTITY_DISCLOSED, quantity=",".join(sorted(referenced_quantities(task))))

    kind = infer_kind(task)
    before = g1.w_out
    if entry and not trace.entry_mitigation:
        before = initial_carrier(kind)
    after = g2.w_in
    if before is None or after is None:
        return
    value = reading_from_diff(kind, before, after)
    if value is not None:
        yield finding(Claim.READING_DISCLOSED, value=value)


def _exit_findings(trace: Trace, query_id: str, segments: list[Segment]) -> Iterator[Finding]:
    """With no entry offsets, the carrier on the last leg gives away the contributor count."""
    last = segments[-1]
    if trace.entry_mitigation or last.next != trace.sink:
        return
    source = last
    if not last.processors:
        # only decoys left: link back to the last keyed carrier by the unchanged body
        if len(segments) < 2 or segments[-2].body_out != last.body_in:
            return
        source = segments[-2]
    final = source.w_out
    if final is None:
        return
    yield Finding(
        query_id=query_id,
        subject=trace.sink,
        claim=Claim.CONTRIBUTORS_DISCLOSED,
        case=CaseLabel.EXIT,
        value=float(final.count),
        evidence_event_ids=source.event_ids + last.event_ids if source is not last else last.event_ids,
    )


def internal_findings(
    trace: Trace,
    owned: Collection[int],
    policy: AdversaryPolicy = AdversaryPolicy.ALWAYS,
) -> list[Finding]:
    """Everything nodes in `owned` can conclude about every query in `trace`.

    Raises:
        ConfigError: `owned` contains the sink.
    """
    try:
        config = AdversaryConfig(owned=frozenset(owned), policy=policy, sink=trace.sink)
    except ValidationError as e:
        raise ConfigError(f"Invalid adversary: {e}") from e

    findings: list[Finding] = []
    for truth in trace.queries:
        stations = observe_query(trace, truth.query_id, config.owned)
        if not stations:
            continue
        segments = segments_of(stations)
        findings.extend(_route_findings(trace, truth.query_id, segments, config.owned))
        for g1, g2 in pairwise(segments):
            findings.extend(_gap_findings(trace, truth.query_id, g1, g2, config.policy))
        findings.extend(_exit_findings(trace, truth.query_id, segments))
    return dedupe(findings)
