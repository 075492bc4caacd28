"""Summary statistics and significance tests over QTTR records."""

from collections import defaultdict
from collections.abc import Iterable, Sequence

import numpy as np
from pydantic import BaseModel
from scipy import stats

from onion_wsn.core.logger import logger
from onion_wsn.core.netsim.engine import QttrRecord
from onion_wsn.core.netsim.topology import DEFAULT_COMM_RANGE, TopologyKind, build_random_disc, reachable_set
from onion_wsn.core.onion import DEFAULT_TASK_MAX, body_size_for, head_size_for


class SummaryRow(BaseModel):
    """
    QTTR statistics of one (topology, s, n) group; None when no query returned.
    """

    topology: TopologyKind
    s: int
    n: int
    count: int
    returned: int
    min: float | None = None
    mean: float | None = None
    max: float | None = None
    std: float | None = None
    q25: float | None = None
    median: float | None = None
    q75: float | None = None
    pct_aborted: float


class RankTest(BaseModel):
    name: str
    topology: TopologyKind | None = None
    s: int | None = None
    n: int | None = None
    statistic: float
    p_value: float
    medians: dict[str, float]


class ReachabilitySurvey(BaseModel):
    s: int
    runs: int
    fractions: list[float]
    q25: float
    median: float
    q75: float


class QuerySize(BaseModel):
    n: int
    head_bytes: int
    body_bytes: int
    total_bytes: int


def _group(records: Iterable[QttrRecord]) -> dict[tuple[TopologyKind, int, int], list[QttrRecord]]:
    groups: dict[tuple[TopologyKind, int, int], list[QttrRecord]] = defaultdict(list)
    for record in records:
        groups[(record.topology, record.s, record.n)].append(record)
    return groups


def _returned(records: Iterable[QttrRecord]) -> list[float]:
    return [r.qttr_s for r in records if not r.aborted and r.qttr_s is not None]


def describe(samples: Sequence[float]) -> dict[str, float]:
    """Sample statistics; std uses ddof=1 and is 0 for a single sample."""
    values = np.asarray(samples, dtype=float)
    q25, median, q75 = np.quantile(values, [0.25, 0.5, 0.75], method="linear")
    return {
        "min": float(values.min()),
        "mean": float(values.mean()),
        "max": float(values.max()),
        "std": float(values.std(ddof=1)) if len(values) > 1 else 0.0,
        "q25": float(q25),
        "median": float(median),
        "q75": float(q75),
    }


def summarize(records: Sequence[QttrRecord]) -> list[SummaryRow]:
    """One row per (topology, s, n), sorted.

    Raises:
        ValueError: No records.
    """
    if not records:
        raise ValueError("Nothing to summarize")
    rows = []
    for (topology, s, n), group in sorted(_group(records).items()):
        qttrs = _returned(group)
        aborted = len(group) - len(qttrs)
        rows.append(
            SummaryRow(
                topology=topology,
                s=s,
                n=n,
                count=len(group),
                returned=len(qttrs),
                pct_aborted=100.0 * aborted / len(group),
                **(describe(qttrs) if qttrs else {}),
            )
        )
    return rows


def kruskal_by_network_size(records: Sequence[QttrRecord]) -> list[RankTest]:
    """Kruskal-Wallis test across network sizes, per topology and path length."""
    by_s: dict[tuple[TopologyKind, int], dict[int, list[float]]] = defaultdict(dict)
    for (topology, s, n), group in sorted(_group(records).items()):
        qttrs = _returned(group)
        if qttrs:
            by_s[(topology, n)][s] = qttrs
    tests = []
    for (topology, n), samples in sorted(by_s.items()):
        if len(samples) < 2:
            continue
        try:
            result = stats.kruskal(*samples.values())
        except ValueError as e:
            logger.debug("Skipping Kruskal-Wallis for %s n=%d: %s", topology, n, e)
            continue
        tests.append(
            RankTest(
                name="kruskal",
                topology=topology,
                n=n,
                statistic=float(result.statistic),
                p_value=float(result.pvalue),
                medians={str(s): float(np.median(v)) for s, v in samples.items()},
            )
        )
    return tests


def topology_test(records: Sequence[QttrRecord], s: int | None = None, n: int | None = None) -> RankTest | None:
    """One-sided Mann-Whitney U test that grid QTTRs are lower than disc QTTRs."""
    selected = [r for r in records if (s is None or r.s == s) and (n is None or r.n == n)]
    grid = _returned(r for r in selected if r.topology is TopologyKind.GRID)
    disc = _returned(r for r in selected if r.topology is TopologyKind.DISC)
    if not grid or not disc:
        return None
    result = stats.mannwhitneyu(grid, disc, alternative="less")
    return RankTest(
        name="mannwhitneyu",
        s=s,
        n=n,
        statistic=float(result.statistic),
        p_value=float(result.pvalue),
        medians={"grid": float(np.median(grid)), "disc": float(np.median(disc))},
    )


def reachability_survey(
    s: int,
    runs: int = 30,
    seed: int = 0,
    r_s: float = 35.0,
    comm_range: float = DEFAULT_COMM_RANGE,
) -> ReachabilitySurvey:
    """Share of sensor nodes that can reach the sink across seeded disc topologies."""
    fractions = []
    for run in range(runs):
        rng = np.random.default_rng(np.random.SeedSequence([seed, run]))
        topology = build_random_disc(s, r_s, rng, comm_range)
        fractions.append((len(reachable_set(topology)) - 1) / max(s - 1, 1))
    q25, median, q75 = np.quantile(fractions, [0.25, 0.5, 0.75])
    return ReachabilitySurvey(
        s=s, runs=runs, fractions=fractions, q25=float(q25), median=float(median), q75=float(q75)
    )


def query_size_table(n_values: Iterable[int], task_max: int = DEFAULT_TASK_MAX) -> list[QuerySize]:
    body = body_size_for(task_max)
    return [
        QuerySize(n=n, head_bytes=head_size_for(n), body_bytes=body, total_bytes=head_size_for(n) + body)
        for n in n_values
    ]
