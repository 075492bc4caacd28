"""Small hand-laid networks for replaying one query along a fixed path.

Path nodes are 1..m in a chain, and each leg is a single radio hop. The sink
hears every path node directly, so no relay sits between path nodes. With an
entry relay, node m + 1 is the only way from the sink to node 1.
"""

from collections.abc import Sequence

import numpy as np

from onion_wsn.core.netsim.engine import QueryPlan, SimulationParams, SimulationResult, Simulator
from onion_wsn.core.netsim.link import LinkModel
from onion_wsn.core.netsim.topology import SINK, Topology, TopologyKind
from onion_wsn.core.runtime.sensor_node import NodeTiming


def scenario_topology(m: int, entry_relay: bool = False) -> Topology:
    if m < 3:
        raise ValueError("Scenarios need a path of at least 3 nodes")
    positions = {node: (10.0 * node, 0.0) for node in range(m + 1)}
    edges = [(k, k + 1) for k in range(1, m)]
    if entry_relay:
        relay = m + 1
        positions[relay] = (5.0, 5.0)
        edges += [(SINK, relay), (relay, 1)]
        edges += [(SINK, k) for k in range(3, m + 1)]
    else:
        edges += [(SINK, k) for k in range(1, m + 1)]
    return Topology.from_edges(positions, edges, TopologyKind.LINE)


def entry_relay_of(m: int) -> int:
    return m + 1


def scenario_run(
    m: int,
    target_positions: Sequence[int],
    entry_relay: bool = False,
    entry_mitigation: bool = True,
    delays: bool = False,
    queries: int = 1,
    seed: int = 0,
) -> SimulationResult:
    """Send `queries` queries along path 1..m with the given target positions."""
    topology = scenario_topology(m, entry_relay)
    params = SimulationParams(
        n=m,
        timing=NodeTiming(delays_enabled=delays),
        entry_mitigation=entry_mitigation,
        record_trace=True,
    )
    plans = [
        QueryPlan(path=list(range(1, m + 1)), target_positions=list(target_positions))
        for _ in range(queries)
    ]
    return Simulator(topology, LinkModel(), params, np.random.default_rng(seed), plans).run()
