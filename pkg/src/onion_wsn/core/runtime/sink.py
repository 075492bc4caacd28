"""Sink side of the protocol: issue queries for a request, collect them, merge."""

from ipaddress import IPv4Address

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from onion_wsn.core.envelope import KeyPair
from onion_wsn.core.exceptions import (
    AuthenticationError,
    DuplicateQueryError,
    MalformedLayerError,
    StaleQueryError,
    UnknownQueryError,
)
from onion_wsn.core.logger import logger
from onion_wsn.core.models.query import (
    CarrierOffset,
    IssuedQuery,
    Query,
    QueryDefinition,
    RecoveryRules,
    RequestResult,
)
from onion_wsn.core.models.registry import Registry
from onion_wsn.core.models.request import Request
from onion_wsn.core.onion import DEFAULT_TASK_MAX, build_body, build_head, open_body, peel
from onion_wsn.core.telemetry import record_query, trace_operation
from onion_wsn.core.translator.path_selection import plan_queries, query_path_selection
from onion_wsn.core.translator.targets import select_targets
from onion_wsn.core.translator.task_compiler import compile_task
from onion_wsn.core.vm.aggregation import AggregationKind, finalize, initial_carrier, merge_carriers
from onion_wsn.core.vm.carrier import CarrierString
from onion_wsn.core.vm.interpreter import Task

OFFSET_RANGE = 1 << 16


class PendingQuery(BaseModel):
    """
    A query that left the sink and has not come back.
    """

    definition: QueryDefinition
    issued_at: float = 0.0
    """
    Issue time in seconds on the caller's clock.
    """

    model_config = ConfigDict(frozen=True)


class SinkSession(BaseModel):
    """
    State of one request at the sink.
    """

    address: IPv4Address
    keypair: KeyPair
    registry: Registry
    universe: list[IPv4Address] = Field(default_factory=list)
    """
    U used for path selection; defaults to every registered node.
    """

    task_max: int = DEFAULT_TASK_MAX
    head_size: int | None = None
    """
    Fixed L_H for every query; None sizes each head for its own path length.
    """

    entry_mitigation: bool = True
    task: Task | None = None
    rules: RecoveryRules | None = None
    pending: dict[bytes, PendingQuery] = Field(default_factory=dict)
    partials: dict[bytes, CarrierString] = Field(default_factory=dict)
    retired: set[bytes] = Field(default_factory=set)
    reissued: int = 0
    result: RequestResult | None = None

    def model_post_init(self, context: object, /) -> None:
        if not self.universe:
            self.universe = self.registry.addresses()


def _draw_offset(kind: AggregationKind, rng: np.random.Generator) -> CarrierOffset:
    acc1, acc2, count = (int(v) for v in rng.integers(0, OFFSET_RANGE, size=3))
    return CarrierOffset(acc1=0 if kind is AggregationKind.MAX else acc1, acc2=acc2, count=count)


def issue_definition(
    session: SinkSession,
    definition: QueryDefinition,
    rng: np.random.Generator,
    now: float = 0.0,
) -> IssuedQuery:
    """Build the query for one definition and mark it pending."""
    if session.task is None or session.rules is None:
        raise UnknownQueryError("No request is active on this session")
    carrier = initial_carrier(session.rules.merge_op)
    if session.entry_mitigation:
        offset = _draw_offset(session.rules.merge_op, rng)
        session.rules.offsets[definition.query_id] = offset
        carrier = offset.apply(carrier)
    head = build_head(
        definition,
        session.address,
        session.keypair.public_key,
        session.registry,
        rng,
        session.head_size,
    )
    body = build_body(session.task, carrier, definition.e_first, rng, session.task_max)
    session.pending[definition.query_id] = PendingQuery(definition=definition, issued_at=now)
    return IssuedQuery(
        first_hop=definition.path[0],
        query=Query(head=head, body=body),
        query_id=definition.query_id,
    )


def open_request(session: SinkSession, task: Task, rules: RecoveryRules) -> None:
    """Reset `session` for a new request planned elsewhere."""
    session.task = task
    session.rules = rules
    session.pending.clear()
    session.partials.clear()
    session.retired.clear()
    session.reissued = 0
    session.result = None


@trace_operation("sink_issue")
def sink_issue(
    session: SinkSession,
    request: Request,
    n: int,
    rng: np.random.Generator,
    now: float = 0.0,
) -> list[IssuedQuery]:
    """Translate `request` and issue one query per planned circuit.

    Raises:
        NoMatchingNodesError: No node matches the request; nothing is issued.
        InsufficientDecoysError: U is too small for paths of length n.
        UnknownAggregationError, TaskTooLargeError: From task compilation.
    """
    targets = select_targets(session.registry, request.phi, request.tau, session.universe)
    task = compile_task(request.phi, session.task_max)
    definitions, rules = plan_queries(
        session.universe, targets, n, rng, request.phi.aggregation.kind
    )
    open_request(session, task, rules)
    issued = [issue_definition(session, d, rng, now) for d in definitions]
    logger.info(
        "Issued %d queries of length %d for %d target nodes", len(issued), n, len(targets)
    )
    return issued


def sink_collect(session: SinkSession, query: Query) -> RequestResult | None:
    """Accept a returning query.

    Returns:
        The merged request result once every query of the request is back,
        otherwise None.

    Raises:
        UnknownQueryError: The query was not issued by this session.
        StaleQueryError: The query id was retired by an abort.
        DuplicateQueryError: The query id was already collected.
    """
    try:
        peeled = peel(query.head, session.keypair.private_key)
    except (AuthenticationError, MalformedLayerError) as e:
        raise UnknownQueryError("Returning head does not open with the sink key") from e
    query_id = peeled.query_id
    if query_id is None:
        raise UnknownQueryError("Returning head has no terminal layer")
    if query_id in session.retired:
        raise StaleQueryError("Query was aborted and replaced")
    if query_id in session.partials:
        raise DuplicateQueryError("Query was already collected")
    if query_id not in session.pending or session.rules is None:
        raise UnknownQueryError("Query id is not part of the active request")

    try:
        parts = open_body(query.body, query_id, session.task_max)
    except (AuthenticationError, MalformedLayerError) as e:
        raise UnknownQueryError("Returning body does not open with the query id") from e
    carrier = parts.carrier
    offset = session.rules.offsets.get(query_id)
    if offset is not None:
        carrier = offset.remove(carrier)
    session.partials[query_id] = carrier
    del session.pending[query_id]
    logger.debug("Collected %d of %d queries", len(session.partials), session.rules.expected_count)

    if len(session.partials) < session.rules.expected_count:
        return None
    merged = merge_carriers(
        session.rules.merge_op, (session.partials[qid] for qid in session.rules.query_ids)
    )
    session.result = RequestResult(
        value=finalize(session.rules.merge_op, merged),
        kind=session.rules.merge_op,
        contributing=merged.count,
        queries=session.rules.expected_count,
        reissued=session.reissued,
    )
    return session.result


def abort_and_reissue(
    session: SinkSession,
    query_id: bytes,
    rng: np.random.Generator,
    now: float = 0.0,
    deadline_s: float = 30.0,
) -> IssuedQuery:
    """Retire a stalled query and issue a replacement over the same targets.

    The replacement gets a fresh path, fresh keys and a fresh id; a late
    arrival of the retired id is rejected as stale.

    Raises:
        UnknownQueryError: `query_id` is not pending.
        ValueError: The query has been out for less than `deadline_s`.
    """
    pending = session.pending.pop(query_id, None)
    if pending is None or session.rules is None:
        raise UnknownQueryError("Only pending queries can be aborted")
    if now - pending.issued_at < deadline_s:
        session.pending[query_id] = pending
        raise ValueError(
            f"Query has been out for {now - pending.issued_at:.1f} s, deadline is {deadline_s} s"
        )
    session.retired.add(query_id)
    definition, _ = query_path_selection(
        session.universe, pending.definition.targets, pending.definition.n, rng
    )
    session.rules.replace(query_id, definition.query_id, None)
    session.reissued += 1
    record_query("reissued")
    logger.info(
        "Query aborted after %.1f s, reissued over %d targets",
        now - pending.issued_at,
        len(definition.targets),
    )
    return issue_definition(session, definition, rng, now)

