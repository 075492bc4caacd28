from pydantic_settings import BaseSettings
from pydantic import Field, field_validator, ValidationInfo
from onion_wsn.core.logger import logger
from dotenv import load_dotenv

load_dotenv(dotenv_path=".env", override=False)


class Settings(BaseSettings):
    """
    Deployment-wide protocol constants.
    """

    N_MAX: int = Field(
        description="Longest supported query path; fixes the deployment head size",
        default=100,
        ge=2,
    )
    TASK_MAX_BYTES: int = Field(
        description="Size of the task area of the query body (L_t)",
        default=1280,
        ge=16,
        le=65535,
    )
    DELTA_T_STEPS: int = Field(
        description="Task execution budget in VM steps (the deterministic stand-in for delta_t)",
        default=10_000,
        ge=1,
    )
    VM_STEP_COST_US: float = Field(
        description="Simulated cost of one VM step in microseconds",
        default=1.0,
        ge=0.0,
    )
    DECRYPT_COST_US_PER_BYTE: float = Field(
        description="Simulated decryption cost per byte in microseconds",
        default=2.0,
        ge=0.0,
    )
    DELTA_Q_MS: float = Field(
        description="Fixed hold time before forwarding a query (delta_q), in milliseconds",
        default=50.0,
        gt=0.0,
    )
    R_MAX: float = Field(
        description="Upper bound of the random forwarding multiplier r",
        default=4.0,
        ge=0.0,
    )
    DELAYS_ENABLED: bool = Field(
        description="Hold queries for delta_q * (1 + r) before forwarding",
        default=True,
    )
    ENTRY_MITIGATION: bool = Field(
        description="Start each carrier from random sink-chosen offsets",
        default=True,
    )
    QUERY_TIMEOUT_S: float = Field(
        description="Per-hop deadline after which a query is aborted and reissued",
        default=30.0,
        gt=0.0,
    )
    MAX_REISSUES: int = Field(
        description="How many times an aborted query is reissued before giving up",
        default=3,
        ge=0,
    )
    SINK_ADDRESS: str = Field(
        description="IPv4 address of the sink node",
        default="10.0.0.1",
    )
    DEPLOYMENT_KEY_SEED: int | None = Field(
        description="Seed from which emulated node key pairs are derived",
        default=None,
    )

    LOGGER_NAME: str = "onion_wsn"
    LOGGER_LEVEL: str = Field(
        description="The level of the logger. Must be one of: DEBUG, INFO, WARNING, ERROR, CRITICAL",
        default="INFO",
        alias="ONION_WSN_LOGGER_LEVEL",
        pattern="^(DEBUG|INFO|WARNING|ERROR|CRITICAL)$",
    )
    MSG_FORMAT: str = "%(levelname)s - %(asctime)s - %(message)s"
    DATE_FORMAT: str = "%d-%b-%y %H:%M:%S"

    OTEL_ENABLED: bool = Field(
        description="Boolean indicating whether or not telemetry data is exported via opentelemetry to the observability backend(s).",
        default=False,
    )
    OTEL_SERVICE_NAME: str = Field(
        description="Service identification for opentelemetry.",
        default="onion-wsn",
    )
    OTEL_EXPORTER_OTLP_ENDPOINT: str = Field(
        description="Opentelemetry collector endpoint required for sending data.",
        default="http://otel-collector:4317",
    )

    @property
    def delta_t_ms(self) -> float:
        """Task budget expressed in milliseconds."""
        return self.DELTA_T_STEPS * self.VM_STEP_COST_US / 1000.0

    def safe_model_dump(self) -> dict[str, object]:
        """
        Convert settings to a dictionary, excluding sensitive fields.
        """
        return self.model_dump(exclude={"DEPLOYMENT_KEY_SEED"})

    @field_validator("DELTA_Q_MS")
    def validate_delta_q(cls, v: float, info: ValidationInfo) -> float:
        """
        Task execution must finish before the forwarding hold expires.
        """
        steps = info.data.get("DELTA_T_STEPS", 10_000)
        step_cost = info.data.get("VM_STEP_COST_US", 1.0)
        delta_t_ms = steps * step_cost / 1000.0
        if delta_t_ms >= v:
            raise ValueError(
                f"DELTA_T ({delta_t_ms} ms) must be lower than DELTA_Q_MS ({v} ms)."
            )
        return v

    @field_validator("R_MAX")
    def warn_without_jitter(cls, v: float) -> float:
        if v == 0.0:
            logger.warning(
                "R_MAX is 0: forwarding delays are constant and carry no randomness."
            )
        return v
