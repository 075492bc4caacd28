"""Query path selection and request planning.

`query_path_selection` places up to ⌊n/2⌋ targets at random positions in
[1, n−1] (1-based; the last node is always a decoy), fills the other slots
with decoys drawn without repetition from U∖(Q ∪ B), and chains the target
keys: target j opens the body with the key target j−1 sealed it with.
"""

import math
from collections.abc import Sequence
from ipaddress import IPv4Address

import numpy as np

from onion_wsn.core.envelope import generate_sym_key
from onion_wsn.core.exceptions import InsufficientDecoysError, PathTooShortError
from onion_wsn.core.logger import logger
from onion_wsn.core.models.query import LayerKeys, QueryDefinition, RecoveryRules
from onion_wsn.core.vm.aggregation import AggregationKind


def _uniform_choice(rng: np.random.Generator, candidates: Sequence[IPv4Address]) -> IPv4Address:
    return candidates[int(rng.integers(len(candidates)))]


def _random_position(rng: np.random.Generator, n: int) -> int:
    # ⌊random·(n−1)⌋ + 1, a 1-based slot in [1, n−1]
    return math.floor(rng.random() * (n - 1)) + 1


def _target_slots(rng: np.random.Generator, n: int, count: int) -> list[int]:
    """Zero-based positions for `count` targets, drawn in placement order."""
    taken: list[int] = []
    while len(taken) < count:
        t = _random_position(rng, n)
        if t - 1 not in taken:
            taken.append(t - 1)
    return taken


def chain_keys(
    path: Sequence[IPv4Address],
    target_positions: Sequence[int],
    rng: np.random.Generator,
) -> QueryDefinition:
    """Assemble (S, K, e_F, e_L) for a fixed path and fixed target positions."""
    e_first = generate_sym_key(rng)
    e_last = e_first
    targets = set(target_positions)
    keys: list[LayerKeys | None] = []
    for i in range(len(path)):
        if i in targets:
            layer = LayerKeys(e_a=e_last, e_b=generate_sym_key(rng))
            e_last = layer.e_b
            keys.append(layer)
        else:
            keys.append(None)
    return QueryDefinition(path=list(path), keys=keys, e_first=e_first, e_last=e_last)


def query_path_selection(
    universe: Sequence[IPv4Address],
    targets: Sequence[IPv4Address],
    n: int,
    rng: np.random.Generator,
) -> tuple[QueryDefinition, list[IPv4Address]]:
    """Plan one circuit.

    Args:
        universe: U, every registered sensor node.
        targets: Q, target nodes not yet covered by earlier queries.
        n: Path length.
        rng: Randomness for positions, picks and keys.

    Returns:
        The query definition and the targets still left to cover.

    Raises:
        PathTooShortError: n < 2.
        InsufficientDecoysError: U∖(Q ∪ B) runs out before the decoy slots are filled.
    """
    if n < 2:
        raise PathTooShortError(f"Query paths need at least 2 nodes, got {n}")
    remaining = list(targets)
    picked: set[IPv4Address] = set()
    slots: list[IPv4Address | None] = [None] * n

    count = min(len(remaining), n // 2)
    placed = 0
    while placed < count:
        position = _random_position(rng, n) - 1
        if slots[position] is None:
            node = _uniform_choice(rng, remaining)
            remaining.remove(node)
            picked.add(node)
            slots[position] = node
            placed += 1
    target_positions = [i for i, node in enumerate(slots) if node is not None]

    excluded = set(remaining)
    for i in range(n):
        if slots[i] is not None:
            continue
        candidates = sorted(u for u in universe if u not in excluded and u not in picked)
        if not candidates:
            raise InsufficientDecoysError(
                f"Need {n - len(target_positions)} decoys but U∖(Q ∪ B) ran out "
                f"(|U|={len(universe)}, |Q|={len(remaining)})"
            )
        decoy = _uniform_choice(rng, candidates)
        picked.add(decoy)
        slots[i] = decoy

    path = [node for node in slots if node is not None]
    return chain_keys(path, target_positions, rng), remaining


def sample_query_definition(
    universe: Sequence[IPv4Address],
    n: int,
    rng: np.random.Generator,
    targets: Sequence[IPv4Address] | None = None,
    allow_repeats: bool = False,
) -> QueryDefinition:
    """Random circuit for simulation runs.

    Without repeats this is `query_path_selection` over ⌊n/2⌋ targets drawn
    from `universe` (or the given `targets`). With repeats, every slot is drawn
    uniformly from `universe` excluding the previous slot's node, so paths may
    be longer than the network is large.
    """
    if targets is None:
        order = rng.permutation(len(universe))
        targets = [universe[int(i)] for i in order[: n // 2]]
    if not allow_repeats:
        definition, _ = query_path_selection(universe, targets, n, rng)
        return definition

    if n < 2:
        raise PathTooShortError(f"Query paths need at least 2 nodes, got {n}")
    if len(universe) < 2:
        raise InsufficientDecoysError("Repeating paths need at least 2 distinct nodes")
    positions = _target_slots(rng, n, min(len(targets), n // 2))
    target_iter = iter(targets)
    assigned = {position: next(target_iter) for position in positions}
    path: list[IPv4Address] = []
    for i in range(n):
        node = assigned.get(i)
        if node is None or (path and path[-1] == node):
            candidates = [u for u in universe if not path or u != path[-1]]
            following = assigned.get(i + 1)
            candidates = [u for u in candidates if u != following] or candidates
            node = _uniform_choice(rng, candidates)
            if i in assigned:
                positions.remove(i)
        path.append(node)
    return chain_keys(path, sorted(positions), rng)


def plan_queries(
    universe: Sequence[IPv4Address],
    targets: Sequence[IPv4Address],
    n: int,
    rng: np.random.Generator,
    merge_op: AggregationKind = AggregationKind.SUM,
) -> tuple[list[QueryDefinition], RecoveryRules]:
    """Repeat `query_path_selection` until every target is covered.

    Returns:
        P with |P| = ⌈|Q| / ⌊n/2⌋⌉, and the recovery rules pi for it.
    """
    remaining = list(targets)
    definitions: list[QueryDefinition] = []
    while remaining:
        definition, remaining = query_path_selection(universe, remaining, n, rng)
        definitions.append(definition)
    logger.debug(
        "Planned %d queries of length %d for %d targets", len(definitions), n, len(targets)
    )
    rules = RecoveryRules(
        query_ids=[d.query_id for d in definitions],
        merge_op=merge_op,
        expected_count=len(definitions),
    )
    return definitions, rules
