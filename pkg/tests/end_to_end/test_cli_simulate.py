import json
import subprocess
import sys
from pathlib import Path

import pandas as pd
import pytest

SMALL_RUN = ["--topology", "grid", "--s", "25", "--n", "4,6", "--queries", "3"]


def _simulate(tmp_path: Path, name: str, *args: str) -> subprocess.CompletedProcess[str]:
    cmd = [
        sys.executable,
        "-m",
        "onion_wsn.cli",
        "simulate",
        *args,
        "--output-csv",
        str(tmp_path / f"{name}.csv"),
        "--output-json",
        str(tmp_path / f"{name}.json"),
    ]
    return subprocess.run(cmd, capture_output=True, text=True)


@pytest.mark.end_to_end
def test_cli_simulate_outputs(tmp_path: Path) -> None:
    # Act
    result = _simulate(tmp_path, "run", *SMALL_RUN, "--seed", "7")

    # Assert
    assert result.returncode == 0, f"CLI failed with error: {result.stderr}"
    frame = pd.read_csv(tmp_path / "run.csv")
    assert list(frame.columns) == ["topology", "s", "n", "query_id", "qttr_s", "aborted", "hops_total"]
    assert len(frame) == 6
    assert sorted(set(frame["n"])) == [4, 6]

    summary = json.loads((tmp_path / "run.json").read_text())
    assert summary["config"]["seed"] == 7
    assert [row["n"] for row in summary["summary"]] == [4, 6]
    assert [row["head_bytes"] for row in summary["query_sizes"]] == [5 * 149, 7 * 149]
    assert "pct_aborted" in result.stdout


@pytest.mark.end_to_end
def test_cli_simulate_is_seeded(tmp_path: Path) -> None:
    # Act
    _simulate(tmp_path, "first", *SMALL_RUN, "--seed", "7")
    _simulate(tmp_path, "second", *SMALL_RUN, "--seed", "7")
    _simulate(tmp_path, "other", *SMALL_RUN, "--seed", "8")

    # Assert
    first = (tmp_path / "first.csv").read_text()
    assert first == (tmp_path / "second.csv").read_text()
    assert first != (tmp_path / "other.csv").read_text()


@pytest.mark.end_to_end
def test_cli_simulate_preset_with_overrides(tmp_path: Path) -> None:
    result = _simulate(tmp_path, "preset", "config/experiment1_grid.cfg", "--s", "50", "--n", "5", "--queries", "2")
    assert result.returncode == 0, f"CLI failed with error: {result.stderr}"
    assert len(pd.read_csv(tmp_path / "preset.csv")) == 2


@pytest.mark.end_to_end
@pytest.mark.parametrize(
    "args",
    [
        ["config/missing.cfg"],
        [*SMALL_RUN, "--colour", "blue"],
        [*SMALL_RUN, "--n", "1"],
        [*SMALL_RUN, "--queries"],
        [*SMALL_RUN, "--trace", "trace.json"],
    ],
)
def test_cli_simulate_invalid(tmp_path: Path, args: list[str]) -> None:
    result = _simulate(tmp_path, "invalid", *args)
    assert result.returncode == 2
    assert not (tmp_path / "invalid.csv").exists()
