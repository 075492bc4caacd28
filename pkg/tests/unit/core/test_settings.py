import pytest
from pydantic import ValidationError
from onion_wsn.core.settings import Settings
from unittest.mock import patch


@pytest.mark.unit
def test_default_settings_are_consistent() -> None:
    """
    Verifies the defaults satisfy the timing constraint delta_t < delta_q.
    """
    # Arrange & Act
    settings = Settings()

    # Assert
    assert settings.delta_t_ms == pytest.approx(10.0)
    assert settings.delta_t_ms < settings.DELTA_Q_MS
    assert settings.TASK_MAX_BYTES == 1280


@pytest.mark.unit
def test_task_budget_must_fit_inside_forwarding_hold() -> None:
    """
    Verifies that an error is raised when the task budget is not below delta_q.
    """
    # Arrange & Act & Assert
    with pytest.raises(ValidationError) as excinfo:
        Settings(DELTA_T_STEPS=60_000, VM_STEP_COST_US=1.0, DELTA_Q_MS=50.0)

    error_msg = str(excinfo.value)
    assert "DELTA_T (60.0 ms) must be lower than DELTA_Q_MS (50.0 ms)" in error_msg


@pytest.mark.unit
@patch("onion_wsn.core.settings.logger")
def test_zero_jitter_warns(mock_logger) -> None:
    """
    Verifies that a warning is logged when forwarding delays carry no randomness.
    """
    # Arrange & Act
    settings = Settings(R_MAX=0.0)

    # Assert
    assert settings.R_MAX == 0.0
    mock_logger.warning.assert_called_once_with(
        "R_MAX is 0: forwarding delays are constant and carry no randomness."
    )


@pytest.mark.unit
@patch("onion_wsn.core.settings.logger")
def test_jitter_does_not_warn(mock_logger) -> None:
    # Arrange & Act
    Settings(R_MAX=2.0)

    # Assert
    mock_logger.warning.assert_not_called()


@pytest.mark.unit
def test_safe_model_dump_hides_key_seed() -> None:
    # Arrange
    settings = Settings(DEPLOYMENT_KEY_SEED=7)

    # Act
    dumped = settings.safe_model_dump()

    # Assert
    assert "DEPLOYMENT_KEY_SEED" not in dumped
    assert dumped["N_MAX"] == 100


@pytest.mark.unit
def test_settings_read_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    # Arrange
    monkeypatch.setenv("N_MAX", "12")
    monkeypatch.setenv("ENTRY_MITIGATION", "false")

    # Act
    settings = Settings()

    # Assert
    assert settings.N_MAX == 12
    assert settings.ENTRY_MITIGATION is False


@pytest.mark.unit
def test_path_limit_must_allow_two_nodes() -> None:
    with pytest.raises(ValidationError):
        Settings(N_MAX=1)
