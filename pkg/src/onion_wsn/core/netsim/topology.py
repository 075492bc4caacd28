"""Network layouts and static shortest-path routing.

Nodes are integers; the sink is always node 0. Node k has address
10.0.0.0 + k + 1, so the sink is 10.0.0.1.
"""

import math
from collections.abc import Iterable
from enum import StrEnum
from ipaddress import IPv4Address

import networkx as nx
import numpy as np

from onion_wsn.core.exceptions import RoutingError

SINK = 0
_BASE_ADDRESS = int(IPv4Address("10.0.0.0"))
DEFAULT_COMM_RANGE = 100.0


class TopologyKind(StrEnum):
    GRID = "grid"
    DISC = "disc"
    LINE = "line"


def address_of(node: int) -> IPv4Address:
    return IPv4Address(_BASE_ADDRESS + node + 1)


def node_of(address: IPv4Address) -> int:
    return int(address) - _BASE_ADDRESS - 1


class Topology:
    """
    Node positions and radio links of a simulated network.
    """

    def __init__(
        self,
        kind: TopologyKind,
        graph: nx.Graph,
        comm_range: float = DEFAULT_COMM_RANGE,
    ) -> None:
        self.kind = kind
        self.graph = graph
        self.comm_range = comm_range
        self._distances: dict[int, dict[int, int]] = {}

    @classmethod
    def from_edges(
        cls,
        positions: dict[int, tuple[float, float]],
        edges: Iterable[tuple[int, int]],
        kind: TopologyKind = TopologyKind.LINE,
        comm_range: float = DEFAULT_COMM_RANGE,
    ) -> "Topology":
        graph = nx.Graph()
        for node, pos in sorted(positions.items()):
            graph.add_node(node, pos=pos)
        graph.add_edges_from(edges)
        return cls(kind, graph, comm_range)

    @property
    def size(self) -> int:
        return int(self.graph.number_of_nodes())

    @property
    def sink(self) -> int:
        return SINK

    def nodes(self) -> list[int]:
        return sorted(self.graph.nodes)

    def sensor_nodes(self) -> list[int]:
        return [node for node in self.nodes() if node != SINK]

    def position(self, node: int) -> tuple[float, float]:
        x, y = self.graph.nodes[node]["pos"]
        return float(x), float(y)

    def neighbors(self, node: int) -> list[int]:
        return sorted(self.graph.neighbors(node))

    def distance(self, u: int, v: int) -> float:
        (x1, y1), (x2, y2) = self.position(u), self.position(v)
        return math.hypot(x1 - x2, y1 - y2)

    def _hops_to(self, dst: int) -> dict[int, int]:
        if dst not in self._distances:
            self._distances[dst] = dict(nx.single_source_shortest_path_length(self.graph, dst))
        return self._distances[dst]

    def route(self, src: int, dst: int) -> list[int]:
        """Minimum-hop route from `src` to `dst`, both included.

        Among equally short routes, each step goes to the lowest-numbered
        neighbour that is one hop closer to `dst`.

        Raises:
            RoutingError: `dst` is not reachable from `src`.
        """
        hops = self._hops_to(dst)
        if src not in hops:
            raise RoutingError(f"Node {dst} is unreachable from node {src}")
        route = [src]
        node = src
        while node != dst:
            node = min(v for v in self.graph.neighbors(node) if hops.get(v) == hops[node] - 1)
            route.append(node)
        return route


def _grid_shape(s: int) -> tuple[int, int]:
    rows = max(math.isqrt(s), 1)
    return rows, math.ceil(s / rows)


def build_grid(
    s: int,
    a: float = 60.0,
    rng: np.random.Generator | None = None,
    comm_range: float = DEFAULT_COMM_RANGE,
) -> Topology:
    """Lattice of s nodes spaced `a` metres apart, filled row-major.

    Nodes at Chebyshev distance 1 are linked, so interior nodes have eight
    neighbours. The filled cell nearest the lattice centre is the sink.
    `rng` is accepted for symmetry with `build_random_disc`; the grid is fixed.
    """
    if s < 1:
        raise ValueError("A network needs at least one node")
    rows, cols = _grid_shape(s)
    cells = [(i // cols, i % cols) for i in range(s)]
    centre = ((rows - 1) / 2, (cols - 1) / 2)
    sink_cell = min(
        range(s), key=lambda i: (math.hypot(cells[i][0] - centre[0], cells[i][1] - centre[1]), i)
    )
    order = [sink_cell] + [i for i in range(s) if i != sink_cell]
    node_of_cell = {cell: node for node, cell in enumerate(order)}

    graph = nx.Graph()
    for node, cell in enumerate(order):
        r, c = cells[cell]
        graph.add_node(node, pos=(c * a, r * a))
    for cell, node in node_of_cell.items():
        r, c = cells[cell]
        for dr, dc in ((0, 1), (1, -1), (1, 0), (1, 1)):
            rr, cc = r + dr, c + dc
            if 0 <= cc < cols and rr * cols + cc < s:
                graph.add_edge(node, node_of_cell[rr * cols + cc])
    return Topology(TopologyKind.GRID, graph, comm_range)


def disc_radius(s: int, r_s: float) -> float:
    """r_p such that the disc holds s nodes at one node per pi * r_s^2."""
    return r_s * math.sqrt(s)


def build_random_disc(
    s: int,
    r_s: float = 35.0,
    rng: np.random.Generator | None = None,
    comm_range: float = DEFAULT_COMM_RANGE,
) -> Topology:
    """The sink at the origin plus s - 1 nodes uniform on a disc of radius r_s * sqrt(s).

    Nodes within `comm_range` of each other are linked.
    """
    if s < 1:
        raise ValueError("A network needs at least one node")
    rng = rng or np.random.default_rng()
    r_p = disc_radius(s, r_s)
    radius = r_p * np.sqrt(rng.random(s - 1))
    angle = 2 * np.pi * rng.random(s - 1)
    positions = {SINK: (0.0, 0.0)}
    for k in range(s - 1):
        positions[k + 1] = (float(radius[k] * np.cos(angle[k])), float(radius[k] * np.sin(angle[k])))
    graph = nx.random_geometric_graph(s, comm_range, pos=positions)
    return Topology(TopologyKind.DISC, graph, comm_range)


def build_line(s: int, spacing: float = 60.0, comm_range: float = DEFAULT_COMM_RANGE) -> Topology:
    """Sink followed by s - 1 nodes in a row; each node hears only its neighbours."""
    positions = {k: (k * spacing, 0.0) for k in range(s)}
    return Topology.from_edges(positions, ((k, k + 1) for k in range(s - 1)), TopologyKind.LINE, comm_range)


def build_topology(
    kind: TopologyKind,
    s: int,
    rng: np.random.Generator,
    a: float = 60.0,
    r_s: float = 35.0,
    comm_range: float = DEFAULT_COMM_RANGE,
) -> Topology:
    match kind:
        case TopologyKind.GRID:
            return build_grid(s, a, rng, comm_range)
        case TopologyKind.DISC:
            return build_random_disc(s, r_s, rng, comm_range)
        case TopologyKind.LINE:
            return build_line(s, a, comm_range)
    raise ValueError(f"Unknown topology {kind}")


def reachable_set(topology: Topology) -> set[int]:
    """Nodes in the sink's connected component, the sink included."""
    return set(nx.node_connected_component(topology.graph, SINK))
