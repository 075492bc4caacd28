import json
import subprocess
import sys
from pathlib import Path

import pytest


def _run(*args: str) -> subprocess.CompletedProcess[str]:
    return subprocess.run([sys.executable, "-m", "onion_wsn.cli", *args], capture_output=True, text=True)


def _summary(result: subprocess.CompletedProcess[str]) -> dict[str, object]:
    return json.loads(result.stderr.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def trace_file(tmp_path_factory: pytest.TempPathFactory) -> Path:
    directory = tmp_path_factory.mktemp("trace")
    result = _run(
        "simulate",
        "--topology",
        "grid",
        "--s",
        "25",
        "--n",
        "5",
        "--queries",
        "6",
        "--seed",
        "3",
        "--trace",
        str(directory / "trace.json"),
        "--output-csv",
        str(directory / "qttr.csv"),
        "--output-json",
        str(directory / "summary.json"),
    )
    assert result.returncode == 0, f"CLI failed with error: {result.stderr}"
    return directory / "trace.json"


@pytest.mark.end_to_end
def test_cli_adversary_owning_nothing(trace_file: Path) -> None:
    # Act
    result = _run("adversary", str(trace_file))

    # Assert
    assert result.returncode == 0, f"CLI failed with error: {result.stderr}"
    assert result.stdout == ""
    assert _summary(result)["score"]["total"] == 0  # type: ignore[index]


@pytest.mark.end_to_end
def test_cli_adversary_findings_are_sound(trace_file: Path, tmp_path: Path) -> None:
    # Arrange
    output = tmp_path / "findings.jsonl"

    # Act
    result = _run("adversary", str(trace_file), "--owned", "1,3,5,7,9,11,13", "-o", str(output))

    # Assert
    assert result.returncode == 0, f"CLI failed with error: {result.stderr}"
    findings = [json.loads(line) for line in output.read_text().splitlines()]
    score = _summary(result)["score"]
    assert len(findings) == score["total"] > 0  # type: ignore[index]
    assert score["unsound"] == 0  # type: ignore[index]
    assert all({"query_id", "subject", "claim", "case", "evidence_event_ids"} <= set(f) for f in findings)
    assert not any(f["subject"] in (1, 3, 5, 7, 9, 11, 13) for f in findings)


@pytest.mark.end_to_end
def test_cli_adversary_external(trace_file: Path) -> None:
    result = _run("adversary", str(trace_file), "--external")
    assert result.returncode == 0, f"CLI failed with error: {result.stderr}"
    summary = _summary(result)
    assert summary["external"]["misdetections"] == 0  # type: ignore[index]
    assert summary["score"]["unsound"] == 0  # type: ignore[index]
    assert len(result.stdout.splitlines()) == 6 * 5


@pytest.mark.end_to_end
def test_cli_adversary_disclosure_sweep(trace_file: Path) -> None:
    result = _run("adversary", str(trace_file), "--disclosure", "0,0.5", "--trials", "3")
    assert result.returncode == 0, f"CLI failed with error: {result.stderr}"
    rows = _summary(result)["disclosure"]
    assert [row["owned"] for row in rows] == [0, 12]  # type: ignore[index, union-attr]
    assert rows[0]["rate"] == 0.0  # type: ignore[index]


@pytest.mark.end_to_end
def test_cli_adversary_cannot_own_the_sink(trace_file: Path) -> None:
    assert _run("adversary", str(trace_file), "--owned", "0,4").returncode == 2


@pytest.mark.end_to_end
@pytest.mark.parametrize("content", ["{not json", '{"events": "none"}'])
def test_cli_adversary_malformed_trace(tmp_path: Path, content: str) -> None:
    # Arrange
    path = tmp_path / "broken.json"
    path.write_text(content)

    # Act
    result = _run("adversary", str(path), "--owned", "1")

    # Assert
    assert result.returncode == 2
    assert "not a valid trace" in result.stderr


@pytest.mark.end_to_end
def test_cli_adversary_missing_trace(tmp_path: Path) -> None:
    assert _run("adversary", str(tmp_path / "absent.json")).returncode == 2
