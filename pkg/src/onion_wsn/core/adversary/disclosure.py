from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel

from onion_wsn.core.adversary.findings import AdversaryPolicy, Claim
from onion_wsn.core.adversary.internal import internal_findings
from onion_wsn.core.netsim.trace import Trace


class DisclosureRow(BaseModel):
    fraction: float
    owned: int
    trials: int
    rate: float
    """
    Share of (trial, returned query) pairs with at least one disclosure.
    """


def owned_count(fraction: float, universe: int) -> int:
    return int(round(fraction * universe))


def disclosure_rate(
    trace: Trace,
    fractions: Sequence[float],
    trials: int = 100,
    seed: int = 0,
    policy: AdversaryPolicy = AdversaryPolicy.ALWAYS,
    claims: frozenset[Claim] = frozenset({Claim.READING_DISCLOSED}),
) -> list[DisclosureRow]:
    """Monte-Carlo estimate of how often owned nodes disclose something.

    Trial i draws one random order of the sensor nodes and owns its first
    round(fraction * |U|) entries, so larger fractions own supersets of the
    nodes smaller fractions own.
    """
    rng = np.random.default_rng(seed)
    universe = sorted(trace.keyring)
    returned = [q.query_id for q in trace.queries if not q.aborted]
    orders = [rng.permutation(universe).tolist() for _ in range(trials)]

    rows = []
    for fraction in fractions:
        k = owned_count(fraction, len(universe))
        hits = 0
        for order in orders:
            owned = order[:k]
            if not owned:
                continue
            disclosed = {
                f.query_id
                for f in internal_findings(trace, owned, policy)
                if f.claim in claims and not f.suspected
            }
            hits += sum(qid in disclosed for qid in returned)
        total = trials * len(returned)
        rows.append(
            DisclosureRow(fraction=fraction, owned=k, trials=trials, rate=hits / total if total else 0.0)
        )
    return rows
