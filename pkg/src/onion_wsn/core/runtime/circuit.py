"""In-process driver that walks queries around their circuits.

Used by the `query` command and the end-to-end tests: every sensor node is
emulated locally, hops are instantaneous apart from the node delays, and a
node listed as offline never forwards, which stalls the query until the
per-hop deadline passes and the sink reissues it.
"""

from collections.abc import Collection
from ipaddress import IPv4Address

import numpy as np
from tenacity import (
    Retrying,
    before_sleep_log,
    retry_if_exception_type,
    stop_after_attempt,
)

from onion_wsn.core.exceptions import MisroutedQueryError, QueryAbortedError
from onion_wsn.core.logger import INFO, logger
from onion_wsn.core.models.query import IssuedQuery, Query, RequestResult
from onion_wsn.core.models.request import Request
from onion_wsn.core.onion import head_size_for
from onion_wsn.core.runtime.sensor_node import NodeState, NodeTiming, on_receive
from onion_wsn.core.runtime.sink import SinkSession, abort_and_reissue, sink_collect, sink_issue
from onion_wsn.core.settings import Settings
from onion_wsn.core.translator.registry_file import Deployment, derive_keypair


class CircuitDriver:
    """
    Emulates a deployment: one sink session plus a `NodeState` per sensor node.
    """

    def __init__(
        self,
        deployment: Deployment,
        settings: Settings,
        rng: np.random.Generator,
        offline: Collection[IPv4Address] = (),
    ) -> None:
        self.settings = settings
        self.rng = rng
        self.offline = frozenset(offline)
        self.sink_address = IPv4Address(settings.SINK_ADDRESS)
        self.clock = 0.0
        timing = NodeTiming.from_settings(settings)
        self.nodes = {
            address: NodeState(
                address=address,
                keypair=deployment.keypairs[address],
                sensors=deployment.sensors[address],
                timing=timing,
                task_max=settings.TASK_MAX_BYTES,
            )
            for address in deployment.registry.addresses()
        }
        self.session = SinkSession(
            address=self.sink_address,
            keypair=derive_keypair(settings.DEPLOYMENT_KEY_SEED or 0, self.sink_address),
            registry=deployment.registry,
            task_max=settings.TASK_MAX_BYTES,
            head_size=head_size_for(settings.N_MAX),
            entry_mitigation=settings.ENTRY_MITIGATION,
        )

    def walk(self, issued: IssuedQuery) -> Query:
        """Carry one query from its first hop back to the sink.

        Raises:
            QueryAbortedError: A hop did not forward within the deadline.
        """
        query = issued.query
        hop = issued.first_hop
        for _ in range(self.settings.N_MAX + 1):
            if hop == self.sink_address:
                return query
            node = self.nodes.get(hop)
            if node is None or hop in self.offline:
                self.clock += self.settings.QUERY_TIMEOUT_S
                raise QueryAbortedError(f"No forward from {hop} within the deadline", issued.query_id)
            action = on_receive(node, query, self.rng)
            if action is None:
                self.clock += self.settings.QUERY_TIMEOUT_S
                raise MisroutedQueryError(f"{hop} dropped the query", issued.query_id)
            self.clock += action.delay
            query = action.query
            hop = action.next_hop
        raise QueryAbortedError("Query did not return to the sink", issued.query_id)

    def _complete(self, issued: IssuedQuery) -> RequestResult | None:
        current = issued
        retrying = Retrying(
            stop=stop_after_attempt(self.settings.MAX_REISSUES + 1),
            retry=retry_if_exception_type(QueryAbortedError),
            before_sleep=before_sleep_log(logger, INFO),
            reraise=True,
        )
        for attempt in retrying:
            with attempt:
                if attempt.retry_state.attempt_number > 1:
                    current = abort_and_reissue(
                        self.session,
                        current.query_id,
                        self.rng,
                        now=self.clock,
                        deadline_s=self.settings.QUERY_TIMEOUT_S,
                    )
                returned = self.walk(current)
        return sink_collect(self.session, returned)

    def run(self, request: Request, n: int) -> RequestResult:
        """Issue `request`, walk every query and return the merged result.

        Raises:
            QueryAbortedError: A query still failed after MAX_REISSUES reissues.
        """
        self.clock = 0.0
        issued = sink_issue(self.session, request, n, self.rng, now=self.clock)
        result = None
        for query in issued:
            result = self._complete(query)
        if result is None:
            raise QueryAbortedError("Request finished without a result", b"")
        return result
