from ipaddress import IPv4Address

import numpy as np
import pytest

from onion_wsn.core.exceptions import RoutingError
from onion_wsn.core.netsim.topology import (
    SINK,
    Topology,
    TopologyKind,
    address_of,
    build_grid,
    build_random_disc,
    build_topology,
    disc_radius,
    node_of,
    reachable_set,
)


@pytest.mark.unit
def test_addressing() -> None:
    assert address_of(SINK) == IPv4Address("10.0.0.1")
    assert address_of(41) == IPv4Address("10.0.0.42")
    assert node_of(IPv4Address("10.0.1.0")) == 255


@pytest.mark.unit
def test_line_routes_hop_by_hop(line_topology: Topology) -> None:
    assert line_topology.route(5, SINK) == [5, 4, 3, 2, 1, 0]
    assert line_topology.route(2, 2) == [2]
    assert line_topology.neighbors(3) == [2, 4]


@pytest.mark.unit
def test_grid_sink_is_central(grid_topology: Topology) -> None:
    # Assert
    assert grid_topology.size == 25
    assert grid_topology.position(SINK) == (120.0, 120.0)
    assert len(grid_topology.neighbors(SINK)) == 8
    corners = [n for n in grid_topology.nodes() if len(grid_topology.neighbors(n)) == 3]
    assert len(corners) == 4


@pytest.mark.unit
def test_grid_routes_are_minimal(grid_topology: Topology) -> None:
    # Every node of a 5 x 5 grid is at most two hops from the central sink
    for node in grid_topology.sensor_nodes():
        assert len(grid_topology.route(node, SINK)) - 1 <= 2


@pytest.mark.unit
def test_partial_grid_is_connected() -> None:
    grid = build_grid(10)
    assert grid.size == 10
    assert reachable_set(grid) == set(range(10))


@pytest.mark.unit
def test_disc_is_seeded_and_bounded() -> None:
    # Arrange
    first = build_random_disc(40, 35.0, np.random.default_rng(7))
    second = build_random_disc(40, 35.0, np.random.default_rng(7))
    radius = disc_radius(40, 35.0)

    # Assert
    assert first.size == 40
    assert first.position(SINK) == (0.0, 0.0)
    assert [first.position(n) for n in first.nodes()] == [second.position(n) for n in second.nodes()]
    assert all(np.hypot(*first.position(n)) <= radius for n in first.nodes())
    assert all(first.distance(u, v) <= first.comm_range for u, v in first.graph.edges)


@pytest.mark.unit
def test_unreachable_route() -> None:
    topology = Topology.from_edges({0: (0.0, 0.0), 1: (10.0, 0.0), 2: (900.0, 0.0)}, [(0, 1)])
    assert reachable_set(topology) == {0, 1}
    with pytest.raises(RoutingError):
        topology.route(2, SINK)


@pytest.mark.unit
def test_build_topology_dispatch() -> None:
    rng = np.random.default_rng(0)
    assert build_topology(TopologyKind.GRID, 9, rng).kind is TopologyKind.GRID
    assert build_topology(TopologyKind.DISC, 9, rng).kind is TopologyKind.DISC
    assert build_topology(TopologyKind.LINE, 9, rng).size == 9
