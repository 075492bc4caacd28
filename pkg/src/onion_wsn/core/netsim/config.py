"""Experiment configuration files.

A config is a key-value file in dotenv syntax, one ``key=value`` per line;
list values are comma separated. Unknown keys are rejected.
"""

from pathlib import Path
from typing import Any

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from onion_wsn.core.adversary.findings import AdversaryPolicy
from onion_wsn.core.exceptions import ConfigError
from onion_wsn.core.netsim.link import LinkModel
from onion_wsn.core.netsim.topology import DEFAULT_COMM_RANGE, TopologyKind
from onion_wsn.core.onion import DEFAULT_TASK_MAX
from onion_wsn.core.runtime.sensor_node import NodeTiming


class ExperimentConfig(BaseModel):
    """
    Everything one `simulate` invocation runs.
    """

    topology: list[TopologyKind] = Field(default=[TopologyKind.GRID], min_length=1)
    s: list[int] = Field(default=[50], min_length=1)
    """
    Network sizes, sink included.
    """

    n: list[int] = Field(default=[5], min_length=1)
    """
    Query path lengths.
    """

    queries: int = Field(default=40, ge=1)
    runs: int = Field(default=1, ge=1)
    """
    Repetitions of each (topology, s) cell with derived seeds.
    """

    seed: int = Field(default=0, ge=0)
    a: float = Field(default=60.0, gt=0.0)
    r_s: float = Field(default=35.0, gt=0.0)
    comm_range: float = Field(default=DEFAULT_COMM_RANGE, gt=0.0)

    delays: bool = False
    delta_q_ms: float = Field(default=50.0, gt=0.0)
    r_max: float = Field(default=4.0, ge=0.0)
    delta_t_steps: int = Field(default=10_000, ge=1)
    vm_step_cost_us: float = Field(default=1.0, ge=0.0)
    decrypt_cost_us_per_byte: float = Field(default=2.0, ge=0.0)

    data_rate_bps: float = Field(default=12e6, gt=0.0)
    latency_s: float = Field(default=0.0005, ge=0.0)
    relay_s: float = Field(default=0.0, ge=0.0)
    loss: float = Field(default=0.0, ge=0.0, le=1.0)
    edge_loss: float = Field(default=0.0, ge=0.0, le=1.0)
    edge_exponent: float = Field(default=4.0, gt=0.0)
    rto_s: float = Field(default=0.2, gt=0.0)
    timeout_s: float = Field(default=30.0, gt=0.0)

    task_max: int = Field(default=DEFAULT_TASK_MAX, ge=16, le=65535)
    entry_mitigation: bool = True
    path_repeats: bool = False
    workers: int = Field(default=1, ge=1)

    owned_fraction: float = Field(default=0.0, ge=0.0, lt=1.0)
    """
    Share of registered sensor nodes an internal adversary owns; 0 disables the analysis.
    """

    adversary_policy: AdversaryPolicy = AdversaryPolicy.ALWAYS

    output_csv: Path = Path("qttr.csv")
    output_json: Path = Path("summary.json")

    model_config = ConfigDict(extra="forbid", frozen=True)

    @field_validator("topology", "s", "n", mode="before")
    @classmethod
    def split_list(cls, v: Any) -> Any:
        if isinstance(v, str):
            return [item.strip() for item in v.split(",") if item.strip()]
        if isinstance(v, (int, float)):
            return [v]
        return v

    @field_validator("s")
    @classmethod
    def validate_sizes(cls, v: list[int]) -> list[int]:
        if any(s < 2 for s in v):
            raise ValueError("Network sizes must include the sink and at least one sensor node")
        return v

    @field_validator("n")
    @classmethod
    def validate_path_lengths(cls, v: list[int]) -> list[int]:
        if any(n < 2 for n in v):
            raise ValueError("Query paths need at least 2 nodes")
        return v

    @model_validator(mode="after")
    def validate_timing(self) -> "ExperimentConfig":
        delta_t_ms = self.delta_t_steps * self.vm_step_cost_us / 1000.0
        if delta_t_ms >= self.delta_q_ms:
            raise ValueError(
                f"DELTA_T ({delta_t_ms} ms) must be lower than delta_q_ms ({self.delta_q_ms} ms)."
            )
        return self

    @property
    def cell_count(self) -> int:
        return len(self.topology) * len(self.s) * self.runs

    def link_model(self) -> LinkModel:
        return LinkModel(
            data_rate_bps=self.data_rate_bps,
            latency_s=self.latency_s,
            relay_s=self.relay_s,
            loss=self.loss,
            edge_loss=self.edge_loss,
            edge_exponent=self.edge_exponent,
            rto_s=self.rto_s,
        )

    def node_timing(self) -> NodeTiming:
        return NodeTiming(
            delta_t_steps=self.delta_t_steps,
            delta_q_ms=self.delta_q_ms,
            r_max=self.r_max,
            delays_enabled=self.delays,
            vm_step_cost_us=self.vm_step_cost_us,
            decrypt_cost_us_per_byte=self.decrypt_cost_us_per_byte,
        )


def load_config(path: Path | None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Read a config file and apply command-line overrides on top.

    Raises:
        FileNotFoundError: `path` does not exist.
        ConfigError: A key is unknown or a value is invalid.
    """
    values: dict[str, Any] = {}
    if path is not None:
        if not path.is_file():
            raise FileNotFoundError(f"Config file not found: {path}")
        values.update({k: v for k, v in dotenv_values(path).items() if v is not None})
    values.update(overrides or {})
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigError(f"Invalid experiment config: {e}") from e
