from collections.abc import Iterable, Sequence
from ipaddress import IPv4Address

from onion_wsn.core.exceptions import NoMatchingNodesError
from onion_wsn.core.models.registry import Registry
from onion_wsn.core.models.request import Operation


def select_targets(
    registry: Registry,
    operation: Operation,
    tau: Sequence[str],
    universe: Iterable[IPv4Address] | None = None,
) -> list[IPv4Address]:
    """Q: registered nodes located in tau that sense every quantity phi uses.

    Args:
        registry: U with locations and quantities.
        operation: Parsed phi.
        tau: Target locations.
        universe: Restrict to these addresses (e.g. nodes that registered in
            phase 1); defaults to the whole registry.

    Raises:
        NoMatchingNodesError: Q is empty.
    """
    locations = set(tau)
    needed = operation.quantities()
    allowed = None if universe is None else set(universe)
    selected = [
        entry.address
        for entry in registry
        if entry.location in locations
        and needed <= entry.quantities
        and (allowed is None or entry.address in allowed)
    ]
    if not selected:
        raise NoMatchingNodesError(
            f"No node in {sorted(locations)} senses {sorted(needed)}"
        )
    return selected
