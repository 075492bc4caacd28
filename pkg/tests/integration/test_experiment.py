from pathlib import Path

import pytest

from onion_wsn.core.adversary.disclosure import owned_count
from onion_wsn.core.exceptions import ConfigError
from onion_wsn.core.netsim.config import ExperimentConfig, load_config
from onion_wsn.core.netsim.experiment import run_experiment
from onion_wsn.core.netsim.topology import TopologyKind


@pytest.fixture
def config() -> ExperimentConfig:
    return ExperimentConfig(
        topology=[TopologyKind.GRID, TopologyKind.DISC],
        s=[30],
        n=[4],
        queries=3,
        runs=2,
        seed=9,
        path_repeats=True,
        workers=2,
    )


@pytest.mark.integration
def test_every_cell_runs(config: ExperimentConfig) -> None:
    # Act
    result = run_experiment(config)

    # Assert
    assert len(result.cells) == 4
    assert len(result.records) == 4 * 3
    assert {(c.cell.topology, c.cell.run) for c in result.cells} == {
        (TopologyKind.GRID, 0),
        (TopologyKind.GRID, 1),
        (TopologyKind.DISC, 0),
        (TopologyKind.DISC, 1),
    }
    grid = [c for c in result.cells if c.cell.topology is TopologyKind.GRID]
    assert all(c.reachable_fraction == 1.0 for c in grid)
    assert result.trace is None


@pytest.mark.integration
def test_experiment_is_reproducible(config: ExperimentConfig) -> None:
    first = run_experiment(config.model_copy(update={"workers": 1}))
    second = run_experiment(config)
    assert [r.model_dump() for r in first.records] == [r.model_dump() for r in second.records]


@pytest.mark.integration
def test_runs_differ(config: ExperimentConfig) -> None:
    result = run_experiment(config.model_copy(update={"topology": [TopologyKind.GRID]}))
    run0, run1 = (c.records for c in result.cells)
    assert [r.query_id for r in run0] != [r.query_id for r in run1]


@pytest.mark.integration
def test_trace_needs_a_single_simulation(config: ExperimentConfig) -> None:
    with pytest.raises(ConfigError, match="single"):
        run_experiment(config, keep_trace=True)


@pytest.mark.integration
def test_single_cell_keeps_trace(config: ExperimentConfig) -> None:
    single = config.model_copy(update={"topology": [TopologyKind.GRID], "runs": 1})
    result = run_experiment(single, keep_trace=True)
    assert result.trace is not None
    assert len(result.trace.queries) == 3


@pytest.mark.integration
def test_owned_fraction_scores_an_internal_adversary(config: ExperimentConfig) -> None:
    # Act
    result = run_experiment(config.model_copy(update={"owned_fraction": 0.3, "path_repeats": False}))

    # Assert
    for cell in result.cells:
        (adversary,) = cell.adversary
        assert adversary.n == 4
        assert len(adversary.owned) == owned_count(0.3, round(cell.reachable_fraction * 29))
        assert adversary.score.unsound == 0


@pytest.mark.integration
@pytest.mark.slow
@pytest.mark.parametrize("preset", ["experiment1_grid.cfg", "experiment2.cfg"])
def test_shipped_experiments_reduced(preset: str, tmp_path: Path) -> None:
    # Arrange
    config = load_config(
        Path(__file__).parents[2] / "config" / preset,
        {
            "s": "50",
            "n": "5",
            "queries": "5",
            "runs": "1",
            "output_csv": str(tmp_path / "qttr.csv"),
            "output_json": str(tmp_path / "summary.json"),
        },
    )

    # Act
    result = run_experiment(config)

    # Assert
    assert len(result.records) == 5 * len(config.topology)
