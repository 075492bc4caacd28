import json
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import pandas as pd

from onion_wsn.core.netsim.config import ExperimentConfig
from onion_wsn.core.netsim.engine import QttrRecord
from onion_wsn.core.netsim.experiment import ExperimentResult
from onion_wsn.core.netsim.stats import (
    kruskal_by_network_size,
    query_size_table,
    reachability_survey,
    summarize,
    topology_test,
)
from onion_wsn.core.netsim.topology import TopologyKind

CSV_COLUMNS = ["topology", "s", "n", "query_id", "qttr_s", "aborted", "hops_total"]


def records_frame(records: Sequence[QttrRecord]) -> pd.DataFrame:
    rows = [record.model_dump(mode="json") for record in records]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def write_records_csv(records: Sequence[QttrRecord], path: Path) -> None:
    """Write one row per query; aborted queries have an empty qttr_s."""
    path.parent.mkdir(parents=True, exist_ok=True)
    records_frame(records).to_csv(path, index=False, float_format="%.9f")


def summary_document(config: ExperimentConfig, result: ExperimentResult) -> dict[str, Any]:
    test = topology_test(result.records)
    return {
        "config": config.model_dump(mode="json"),
        "summary": [row.model_dump(mode="json") for row in summarize(result.records)],
        "kruskal": [t.model_dump(mode="json") for t in kruskal_by_network_size(result.records)],
        "topology_test": test.model_dump(mode="json") if test is not None else None,
        "reachability": [
            {
                "topology": cell.cell.topology.value,
                "s": cell.cell.s,
                "run": cell.cell.run,
                "reachable_fraction": cell.reachable_fraction,
            }
            for cell in result.cells
        ],
        "disc_reachability": [
            reachability_survey(s, config.runs, config.seed, config.r_s, config.comm_range).model_dump()
            for s in (config.s if TopologyKind.DISC in config.topology else [])
        ],
        "query_sizes": [row.model_dump() for row in query_size_table(config.n, config.task_max)],
        "adversary": [
            adversary.model_dump(mode="json", exclude={"score": {"unsound_findings"}})
            for cell in result.cells
            for adversary in cell.adversary
        ],
    }


def write_summary_json(config: ExperimentConfig, result: ExperimentResult, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    document = summary_document(config, result)
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
