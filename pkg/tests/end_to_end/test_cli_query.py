import json
import subprocess
import sys

import pytest

from tests.end_to_end.test_cases.query_test_cases import QueryTestCase, test_cases


def _run(*args: str) -> subprocess.CompletedProcess[str]:
    return subprocess.run([sys.executable, "-m", "onion_wsn.cli", *args], capture_output=True, text=True)


@pytest.mark.end_to_end
@pytest.mark.parametrize("test_case", test_cases)
def test_cli_query(test_case: QueryTestCase) -> None:
    # Act
    result = _run(*test_case.args())

    # Assert
    assert result.returncode == 0, f"CLI failed with error: {result.stderr}"
    output = json.loads(result.stdout)
    assert output["value"] == pytest.approx(test_case.expected)
    assert output["contributing"] == test_case.contributing
    assert output["queries"] >= 1


@pytest.mark.end_to_end
def test_cli_query_is_seeded() -> None:
    args = ["query", "--registry", "config/registry.example", "--request", "SUM(temperature) @ lab", "--seed", "8"]
    assert _run(*args).stdout == _run(*args).stdout


@pytest.mark.end_to_end
@pytest.mark.parametrize(
    "request_text",
    [
        "SUM(pressure) @ lab",
        "SUM(temperature) @ basement",
        "MEDIAN(temperature) @ lab",
        "SUM(temperature)",
    ],
)
def test_cli_query_rejects_request(request_text: str) -> None:
    result = _run("query", "--registry", "config/registry.example", "--request", request_text)
    assert result.returncode == 2
    assert result.stdout == ""


@pytest.mark.end_to_end
def test_cli_query_missing_registry() -> None:
    result = _run("query", "--registry", "config/missing.registry", "--request", "SUM(temperature) @ lab")
    assert result.returncode == 2


@pytest.mark.end_to_end
def test_cli_query_offline_target_aborts() -> None:
    result = _run(
        "query",
        "--registry",
        "config/registry.example",
        "--request",
        "MAX(temperature) @ hall",
        "--offline",
        "10.0.0.5",
    )
    assert result.returncode == 1
    assert result.stdout == ""
