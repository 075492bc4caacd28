"""Experiment sweeps over topologies, network sizes and path lengths.

Each (topology, s, run) cell gets its own topology seed and each simulation
inside it its own seed, both derived from the config seed, so results do not
depend on how cells are spread over workers.
"""

from concurrent.futures import ThreadPoolExecutor
from itertools import product

import numpy as np
from pydantic import BaseModel, Field

from onion_wsn.core.adversary.disclosure import owned_count
from onion_wsn.core.adversary.findings import Claim, FindingScore, score_findings
from onion_wsn.core.adversary.internal import internal_findings
from onion_wsn.core.exceptions import ConfigError
from onion_wsn.core.logger import logger
from onion_wsn.core.netsim.config import ExperimentConfig
from onion_wsn.core.netsim.engine import QttrRecord, SimulationParams, Simulator
from onion_wsn.core.netsim.topology import TopologyKind, build_topology
from onion_wsn.core.netsim.trace import Trace
from onion_wsn.core.telemetry import record_query, trace_operation


class Cell(BaseModel):
    kind_index: int
    topology: TopologyKind
    s: int
    run: int


class AdversaryCell(BaseModel):
    """
    What an internal adversary owning part of one simulated network concluded.
    """

    topology: TopologyKind
    s: int
    n: int
    run: int
    owned: list[int]
    score: FindingScore
    queries_disclosed: int
    """
    Returned queries with at least one reading disclosed.
    """


class CellResult(BaseModel):
    cell: Cell
    reachable_fraction: float
    records: list[QttrRecord] = Field(default_factory=list)
    adversary: list[AdversaryCell] = Field(default_factory=list)
    trace: Trace | None = None


class ExperimentResult(BaseModel):
    records: list[QttrRecord]
    cells: list[CellResult]
    trace: Trace | None = None


def _cells(config: ExperimentConfig) -> list[Cell]:
    return [
        Cell(kind_index=i, topology=kind, s=s, run=run)
        for (i, kind), s, run in product(enumerate(config.topology), config.s, range(config.runs))
    ]


def _seed(config: ExperimentConfig, cell: Cell, *extra: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([config.seed, cell.kind_index, cell.s, cell.run, *extra])


def _analyse(
    config: ExperimentConfig, cell: Cell, n: int, universe: list[int], trace: Trace
) -> AdversaryCell:
    rng = np.random.default_rng(_seed(config, cell, n, 1))
    owned = sorted(rng.permutation(universe).tolist()[: owned_count(config.owned_fraction, len(universe))])
    findings = internal_findings(trace, owned, config.adversary_policy)
    disclosed = {f.query_id for f in findings if f.claim is Claim.READING_DISCLOSED and not f.suspected}
    return AdversaryCell(
        topology=cell.topology,
        s=cell.s,
        n=n,
        run=cell.run,
        owned=owned,
        score=score_findings(trace, findings),
        queries_disclosed=len(disclosed),
    )


def run_cell(config: ExperimentConfig, cell: Cell, keep_trace: bool = False) -> CellResult:
    topology = build_topology(
        cell.topology,
        cell.s,
        np.random.default_rng(_seed(config, cell)),
        a=config.a,
        r_s=config.r_s,
        comm_range=config.comm_range,
    )
    link = config.link_model()
    analyse = config.owned_fraction > 0
    result = CellResult(cell=cell, reachable_fraction=0.0)
    for n in config.n:
        params = SimulationParams(
            n=n,
            queries=config.queries,
            timing=config.node_timing(),
            task_max=config.task_max,
            entry_mitigation=config.entry_mitigation,
            path_repeats=config.path_repeats,
            timeout_s=config.timeout_s,
            record_trace=keep_trace or analyse,
        )
        simulation = Simulator(topology, link, params, np.random.default_rng(_seed(config, cell, n))).run()
        result.records.extend(simulation.records)
        for record in simulation.records:
            outcome = "aborted" if record.aborted else "returned"
            record_query(outcome, record.qttr_s, topology=cell.topology.value, s=cell.s, n=n)
        result.reachable_fraction = len(simulation.universe) / max(cell.s - 1, 1)
        if analyse and simulation.trace is not None:
            result.adversary.append(_analyse(config, cell, n, simulation.universe, simulation.trace))
        if keep_trace:
            result.trace = simulation.trace
    aborted = sum(r.aborted for r in result.records)
    logger.info(
        "%s s=%d run=%d: %d queries, %d aborted, %.0f%% reachable",
        cell.topology,
        cell.s,
        cell.run,
        len(result.records),
        aborted,
        100 * result.reachable_fraction,
    )
    return result


@trace_operation("run_experiment")
def run_experiment(config: ExperimentConfig, keep_trace: bool = False) -> ExperimentResult:
    """Run every cell of `config`.

    Raises:
        ConfigError: A path length exceeds a cell's registered nodes, or a
            trace is requested for more than one simulation.
    """
    cells = _cells(config)
    if keep_trace and len(cells) * len(config.n) != 1:
        raise ConfigError("A trace can only be kept for a single topology, size, run and path length")
    logger.info("Running %d cells with %d workers", len(cells), config.workers)
    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        results = list(executor.map(lambda cell: run_cell(config, cell, keep_trace), cells))
    records = [record for result in results for record in result.records]
    trace = results[0].trace if keep_trace else None
    return ExperimentResult(records=records, cells=results, trace=trace)
