"""Discrete-event simulation of the query protocol on a simulated network.

A run has two phases. In the first every sensor node sends its public key to
the sink; nodes whose announcement arrives form U. In the second the sink
issues SUM(temperature) queries one after another, each over a random path of
length n, and records how long each takes to come back.
"""

from collections.abc import Generator, Sequence
from typing import Any

import numpy as np
import simpy
from pydantic import BaseModel, ConfigDict, Field

from onion_wsn.core.envelope import PK_LEN, KeyPair, generate_keypair
from onion_wsn.core.exceptions import ConfigError, RoutingError
from onion_wsn.core.logger import logger
from onion_wsn.core.models.query import QueryDefinition, RecoveryRules
from onion_wsn.core.models.registry import Registry, RegistryEntry
from onion_wsn.core.models.request import Aggregation, Operation
from onion_wsn.core.netsim.link import LinkModel
from onion_wsn.core.netsim.topology import SINK, Topology, TopologyKind, address_of, node_of
from onion_wsn.core.netsim.trace import EventKind, QueryTruth, Trace, TraceRecorder
from onion_wsn.core.onion import ADDRESS_LEN, DEFAULT_TASK_MAX
from onion_wsn.core.runtime.sensor_node import NodeState, NodeTiming, on_receive
from onion_wsn.core.runtime.sink import SinkSession, issue_definition, open_request, sink_collect
from onion_wsn.core.translator.path_selection import chain_keys, sample_query_definition
from onion_wsn.core.translator.task_compiler import compile_task
from onion_wsn.core.vm.aggregation import AggregationKind
from onion_wsn.core.vm.interpreter import SensorInterface

ANNOUNCE_SIZE = ADDRESS_LEN + PK_LEN
QUANTITY = "temperature"
READING_RANGE = (15.0, 30.0)

SimProcess = Generator[simpy.Event, Any, None]


class SimulationParams(BaseModel):
    """
    Per-simulation knobs.
    """

    n: int = Field(ge=2)
    queries: int = Field(default=40, ge=0)
    timing: NodeTiming = Field(default_factory=lambda: NodeTiming(delays_enabled=False))
    task_max: int = DEFAULT_TASK_MAX
    entry_mitigation: bool = True
    path_repeats: bool = False
    timeout_s: float = Field(default=30.0, gt=0.0)
    record_trace: bool = False

    model_config = ConfigDict(frozen=True)


class QueryPlan(BaseModel):
    """
    A fixed path to replay instead of a random one.
    """

    path: list[int]
    target_positions: list[int] = Field(default_factory=list)
    """
    Zero-based positions that act as targets.
    """


class QttrRecord(BaseModel):
    """
    Outcome of one query.
    """

    topology: TopologyKind
    s: int
    n: int
    query_id: str
    qttr_s: float | None = None
    """
    Seconds from issue to return; None when aborted.
    """

    aborted: bool = False
    hops_total: int = 0
    """
    Link transmissions the query needed, retransmissions excluded.
    """


class SimulationResult(BaseModel):
    records: list[QttrRecord]
    universe: list[int]
    results: dict[str, float] = Field(default_factory=dict)
    """
    Value the sink collected per query id.
    """

    trace: Trace | None = None


class Simulator:
    """
    One two-phase simulation on a fixed topology.
    """

    def __init__(
        self,
        topology: Topology,
        link: LinkModel,
        params: SimulationParams,
        rng: np.random.Generator,
        plans: Sequence[QueryPlan] | None = None,
    ) -> None:
        self.topology = topology
        self.link = link
        self.params = params
        self.rng = rng
        self.plans = list(plans) if plans is not None else None
        self.env = simpy.Environment()
        self.recorder = TraceRecorder(params.record_trace)
        self.records: list[QttrRecord] = []
        self.results: dict[str, float] = {}
        self.truths: list[QueryTruth] = []
        self.universe: list[int] = []

        self.keypairs: dict[int, KeyPair] = {
            node: generate_keypair(rng) for node in topology.nodes()
        }
        low, high = READING_RANGE
        self.readings = {node: float(rng.uniform(low, high)) for node in topology.sensor_nodes()}
        self.nodes = {
            node: NodeState(
                address=address_of(node),
                keypair=self.keypairs[node],
                sensors=SensorInterface(readings={QUANTITY: self.readings[node]}),
                timing=params.timing,
                task_max=params.task_max,
            )
            for node in topology.sensor_nodes()
        }
        self.task = compile_task(
            Operation(aggregation=Aggregation(kind=AggregationKind.SUM, quantity=QUANTITY)),
            params.task_max,
        )
        self.session: SinkSession | None = None

    def _record(self, kind: EventKind, **fields: object) -> int | None:
        return self.recorder.record(self.env.now, kind, **fields)

    def _announce(self, node: int) -> SimProcess:
        try:
            route = self.topology.route(node, SINK)
        except RoutingError:
            return
        for u, v in zip(route, route[1:]):
            outcome = self.link.hop(
                ANNOUNCE_SIZE,
                self.topology.distance(u, v),
                self.topology.comm_range,
                self.rng,
                self.params.timeout_s,
            )
            yield self.env.timeout(outcome.elapsed)
            if not outcome.delivered:
                logger.debug("Key announcement from node %d lost", node)
                return
        self._record(EventKind.ANNOUNCE, node=node, src=node, dst=SINK, size=ANNOUNCE_SIZE)
        self.universe.append(node)

    def _phase_one(self) -> None:
        for node in self.topology.sensor_nodes():
            self.env.process(self._announce(node))
        self.env.run()
        self.universe.sort()
        entries = [
            RegistryEntry(
                address=address_of(node),
                public_key=self.keypairs[node].public_key,
                quantities=frozenset({QUANTITY}),
                location=self.topology.kind.value,
            )
            for node in self.universe
        ]
        self.session = SinkSession(
            address=address_of(SINK),
            keypair=self.keypairs[SINK],
            registry=Registry(entries=entries),
            task_max=self.params.task_max,
            entry_mitigation=self.params.entry_mitigation,
        )
        logger.debug("%d of %d sensor nodes registered", len(self.universe), self.topology.size - 1)

    def _check_path_length(self) -> None:
        n = self.params.n
        if self.plans is not None:
            return
        if self.params.path_repeats:
            if len(self.universe) < 2:
                raise ConfigError(f"Only {len(self.universe)} nodes registered, paths need 2")
        elif n > len(self.universe):
            raise ConfigError(
                f"Path length n={n} exceeds the {len(self.universe)} registered nodes "
                "(set path_repeats to reuse nodes)"
            )

    def _definition(self, index: int) -> QueryDefinition:
        addresses = [address_of(node) for node in self.universe]
        if self.plans is None:
            return sample_query_definition(
                addresses, self.params.n, self.rng, allow_repeats=self.params.path_repeats
            )
        plan = self.plans[index]
        return chain_keys([address_of(node) for node in plan.path], plan.target_positions, self.rng)

    def _abort(self, truth: QueryTruth, node: int, hops_total: int, n: int) -> None:
        self._record(EventKind.ABORT, query_id=truth.query_id, node=node)
        truth.aborted = True
        self.records.append(
            QttrRecord(
                topology=self.topology.kind,
                s=self.topology.size,
                n=n,
                query_id=truth.query_id[:16],
                aborted=True,
                hops_total=hops_total,
            )
        )
        logger.info("Query %s aborted at node %d", truth.query_id[:16], node)

    def _circuit(self, definition: QueryDefinition) -> SimProcess:
        assert self.session is not None
        env = self.env
        open_request(
            self.session,
            self.task,
            RecoveryRules(
                query_ids=[definition.query_id], merge_op=AggregationKind.SUM, expected_count=1
            ),
        )
        issued = issue_definition(self.session, definition, self.rng, now=env.now)
        qid = issued.query_id.hex()
        path = [node_of(address) for address in definition.path]
        targets = [node_of(address) for address in definition.targets]
        truth = QueryTruth(
            query_id=qid,
            path=path,
            targets=targets,
            contributions={node: self.readings[node] for node in targets},
        )
        self.truths.append(truth)
        self._record(EventKind.ISSUE, query_id=qid, node=SINK)

        start = env.now
        query = issued.query
        hops_total = 0
        prev = SINK
        for stop in [*path, SINK]:
            route = self.topology.route(prev, stop)
            for u, v in zip(route, route[1:]):
                transmit = self._record(
                    EventKind.TRANSMIT, query_id=qid, node=u, src=u, dst=v,
                    ip_src=prev, ip_dst=stop, size=query.size,
                )
                outcome = self.link.hop(
                    query.size,
                    self.topology.distance(u, v),
                    self.topology.comm_range,
                    self.rng,
                    self.params.timeout_s,
                )
                hops_total += 1
                yield env.timeout(outcome.elapsed)
                if not outcome.delivered:
                    self._abort(truth, u, hops_total, definition.n)
                    return
                if self.recorder.enabled:
                    self._record(
                        EventKind.DELIVER, query_id=qid, node=v, src=u, dst=v,
                        ip_src=prev, ip_dst=stop, size=query.size, ref=transmit,
                        head=query.head.hex() if v == stop else None,
                        body=query.body.hex(),
                    )
                if v != stop and self.link.relay_s > 0:
                    yield env.timeout(self.link.relay_s)
            if stop == SINK:
                break
            self._record(EventKind.PROCESS_START, query_id=qid, node=stop)
            action = on_receive(self.nodes[stop], query, self.rng)
            if action is None:
                self._abort(truth, stop, hops_total, definition.n)
                return
            yield env.timeout(action.delay)
            query = action.query
            if self.recorder.enabled:
                self._record(EventKind.PROCESS_END, query_id=qid, node=stop, body=query.body.hex())
            prev = stop

        result = sink_collect(self.session, query)
        self._record(EventKind.RETURN, query_id=qid, node=SINK)
        if result is not None:
            self.results[qid] = result.value
            expected = sum(truth.contributions.values())
            if abs(result.value - expected) > 1e-6 * max(1.0, abs(expected)):
                logger.warning("Query %s returned %r, expected %r", qid[:16], result.value, expected)
        self.records.append(
            QttrRecord(
                topology=self.topology.kind,
                s=self.topology.size,
                n=definition.n,
                query_id=qid[:16],
                qttr_s=env.now - start,
                hops_total=hops_total,
            )
        )

    def _phase_two(self) -> SimProcess:
        count = self.params.queries if self.plans is None else len(self.plans)
        for index in range(count):
            definition = self._definition(index)
            yield self.env.process(self._circuit(definition))

    def run(self) -> SimulationResult:
        """Run both phases to completion.

        Raises:
            ConfigError: n exceeds the registered node count without path repeats.
        """
        self._phase_one()
        self._check_path_length()
        self.env.process(self._phase_two())
        self.env.run()
        trace = None
        if self.recorder.enabled:
            trace = Trace(
                sink=SINK,
                delays_enabled=self.params.timing.delays_enabled,
                delta_q_ms=self.params.timing.delta_q_ms,
                relay_s=self.link.relay_s,
                entry_mitigation=self.params.entry_mitigation,
                task_max=self.params.task_max,
                keyring={node: self.keypairs[node].private_key.hex() for node in self.nodes},
                events=self.recorder.events,
                queries=self.truths,
            )
        return SimulationResult(
            records=self.records, universe=self.universe, results=self.results, trace=trace
        )
