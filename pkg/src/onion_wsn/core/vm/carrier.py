import math
import struct
from collections.abc import Iterable

from pydantic import BaseModel, ConfigDict, Field

CARRIER_SIZE = 32
COUNT_MAX = (1 << 64) - 1
_LAYOUT = struct.Struct("<ddQff")
_F32 = struct.Struct("<f")


class CarrierString(BaseModel):
    """
    Fixed-size record that carries partial aggregation results around a circuit.

    Layout (little-endian): acc1 f64 ‖ acc2 f64 ‖ count u64 ‖ comp1 f32 ‖ comp2 f32.

    `comp1` and `comp2` hold the rounding error lost by compensated folds into
    acc1 and acc2, so that `total(field)` stays exact when the accumulators
    start from large sink offsets.
    """

    acc1: float = 0.0
    """
    Primary accumulator: running sum, or running maximum.
    """

    acc2: float = 0.0
    """
    Secondary accumulator: running sum of squares for variance and std.
    """

    count: int = Field(default=0, ge=0, le=COUNT_MAX)
    """
    Number of contributing nodes.
    """

    comp1: float = 0.0
    """
    Rounding error carried for acc1.
    """

    comp2: float = 0.0
    """
    Rounding error carried for acc2.
    """

    model_config = ConfigDict(frozen=True)

    def to_bytes(self) -> bytes:
        return _LAYOUT.pack(self.acc1, self.acc2, self.count, self.comp1, self.comp2)

    @classmethod
    def from_bytes(cls, data: bytes) -> "CarrierString":
        if len(data) != CARRIER_SIZE:
            raise ValueError(f"Carrier must be {CARRIER_SIZE} bytes, got {len(data)}")
        acc1, acc2, count, comp1, comp2 = _LAYOUT.unpack(data)
        return cls(acc1=acc1, acc2=acc2, count=count, comp1=comp1, comp2=comp2)

    def with_field(self, field: int, value: float) -> "CarrierString":
        """Return a copy with one field replaced; count saturates to u64."""
        if field == 0:
            return self.model_copy(update={"acc1": value})
        if field == 1:
            return self.model_copy(update={"acc2": value})
        return self.model_copy(update={"count": saturate_count(value)})

    def field(self, field: int) -> float:
        if field == 0:
            return self.acc1
        if field == 1:
            return self.acc2
        return float(self.count)

    def accumulate(self, field: int, value: float) -> "CarrierString":
        """Add `value` into a field, keeping the rounding error of the sum.

        The error of acc + value is recovered exactly (Knuth's TwoSum) and
        folded into the field's compensation term. Count adds plainly.
        """
        if field not in (0, 1):
            return self.with_field(field, self.field(field) + value)
        acc = self.field(field)
        high = acc + value
        if not math.isfinite(high):
            return self.with_field(field, high)
        virtual = high - acc
        low = (acc - (high - virtual)) + (value - virtual)
        acc_name, comp_name = ("acc1", "comp1") if field == 0 else ("acc2", "comp2")
        comp = _to_f32(getattr(self, comp_name) + low)
        return self.model_copy(update={acc_name: high, comp_name: comp})

    def total(self, field: int) -> float:
        """The accumulator with its compensation term added back."""
        if field == 0:
            return exact_sum((self.acc1, self.comp1))
        if field == 1:
            return exact_sum((self.acc2, self.comp2))
        return float(self.count)


def exact_sum(values: Iterable[float]) -> float:
    """Correctly rounded sum; plain float addition once infinities or NaN are involved."""
    values = list(values)
    try:
        return math.fsum(values)
    except (OverflowError, ValueError):
        return sum(values, 0.0)


def _to_f32(value: float) -> float:
    try:
        return _F32.unpack(_F32.pack(value))[0]
    except OverflowError:
        return 0.0


def saturate_count(value: float) -> int:
    if math.isnan(value) or value <= 0:
        return 0
    if value >= COUNT_MAX:
        return COUNT_MAX
    return int(value)
