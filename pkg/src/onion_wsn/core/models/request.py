from pydantic import BaseModel, ConfigDict, Field

from onion_wsn.core.vm.aggregation import AggregationKind
from onion_wsn.core.vm.opcodes import Comparator


class Condition(BaseModel):
    """
    Guard evaluated against a target's local sensors, e.g. `light=ON`.
    """

    quantity: str
    """
    Sensed quantity or status label.
    """

    comparator: Comparator
    """
    Comparison applied as `reading <comparator> literal`.
    """

    literal: float | str
    """
    Numeric literal for readings, or a state name for discrete statuses.
    """

    model_config = ConfigDict(frozen=True)

    @property
    def is_status(self) -> bool:
        return isinstance(self.literal, str)


class Aggregation(BaseModel):
    """
    The aggregation a request computes over its targets.
    """

    kind: AggregationKind
    """
    One of SUM, AVG, MAX, VARIANCE, STD.
    """

    quantity: str
    """
    The quantity being aggregated.
    """

    model_config = ConfigDict(frozen=True)


class Operation(BaseModel):
    """
    The parsed operation phi: an optional condition and one aggregation.
    """

    condition: Condition | None = None
    aggregation: Aggregation

    model_config = ConfigDict(frozen=True)

    def quantities(self) -> frozenset[str]:
        """Every quantity a node must sense to be a target."""
        names = {self.aggregation.quantity}
        if self.condition is not None:
            names.add(self.condition.quantity)
        return frozenset(names)


class Request(BaseModel):
    """
    A request R = (phi, tau) as submitted to the sink.
    """

    phi: Operation
    """
    What to compute.
    """

    tau: list[str] = Field(min_length=1)
    """
    Target locations.
    """

    model_config = ConfigDict(frozen=True)
