from collections.abc import Generator
from unittest.mock import MagicMock, patch

import pytest

from onion_wsn.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, cmd_taskasm, main, parse_overrides
from onion_wsn.core.exceptions import ConfigError, QueryAbortedError
from onion_wsn.core.parser import parser
from onion_wsn.core.translator.dsl import parse_request
from onion_wsn.core.translator.task_compiler import compile_task


@pytest.fixture(autouse=True)
def quiet_startup() -> Generator[None, None, None]:
    with patch("onion_wsn.cli.configure_logger"), patch("onion_wsn.cli.setup_telemetry"):
        yield


@pytest.mark.unit
def test_parse_overrides() -> None:
    args = parser.parse_args(
        ["simulate", "--queries", "10", "--n=5,10", "--entry-mitigation", "false", "--output_csv", "out.csv"]
    )
    assert parse_overrides(args) == {
        "queries": "10",
        "n": "5,10",
        "entry_mitigation": "false",
        "output_csv": "out.csv",
    }


@pytest.mark.unit
def test_single_letter_keys_are_not_abbreviations() -> None:
    args = parser.parse_args(["simulate", "--s", "25", "--a", "40"])
    assert parse_overrides(args) == {"s": "25", "a": "40"}


@pytest.mark.unit
@pytest.mark.parametrize("argv", [["simulate", "--queries"], ["simulate", "--colour", "blue"]])
def test_simulate_invalid_flags(argv: list[str]) -> None:
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == 2


@pytest.mark.unit
@patch("onion_wsn.cli.cmd_simulate", return_value=EXIT_OK)
def test_simulate_forwards_overrides(mock_simulate: MagicMock) -> None:
    # Act
    code = main(["simulate", "--seed", "4", "config/experiment1_grid.cfg", "--queries", "3"])

    # Assert
    assert code == EXIT_OK
    mock_simulate.assert_called_once_with("config/experiment1_grid.cfg", {"seed": "4", "queries": "3"}, None)


@pytest.mark.unit
def test_unknown_arguments_outside_simulate() -> None:
    with pytest.raises(SystemExit) as e:
        main(["taskasm", "compile", "SUM(temperature) @ lab", "--queries", "1"])
    assert e.value.code == 2


@pytest.mark.unit
@pytest.mark.parametrize(
    "error,code",
    [
        (FileNotFoundError("registry.txt"), EXIT_INVALID),
        (ConfigError("bad"), EXIT_INVALID),
        (QueryAbortedError("stalled", b"\x00" * 16), EXIT_RUNTIME),
    ],
)
def test_errors_map_to_exit_codes(error: Exception, code: int) -> None:
    with patch("onion_wsn.cli.cmd_query", side_effect=error):
        assert main(["query", "--registry", "registry.txt", "--request", "SUM(t) @ lab"]) == code


@pytest.mark.unit
@patch("onion_wsn.cli.cmd_adversary", return_value=EXIT_OK)
def test_adversary_defaults(mock_adversary: MagicMock) -> None:
    main(["adversary", "trace.json", "--owned", "3,4"])
    mock_adversary.assert_called_once_with("trace.json", "3,4", "always", False, None, 100, None)


@pytest.mark.unit
def test_adversary_policy_choices() -> None:
    with pytest.raises(SystemExit):
        parser.parse_args(["adversary", "trace.json", "--policy", "sometimes"])


@pytest.mark.unit
def test_taskasm_compile(capsys: pytest.CaptureFixture[str]) -> None:
    # Arrange
    expected = compile_task(parse_request("MAX(temperature) @ lab").phi).bytecode.hex()

    # Act
    code = cmd_taskasm("compile", "MAX(temperature) @ lab", None)

    # Assert
    assert code == EXIT_OK
    assert capsys.readouterr().out.strip() == expected
