import math
from collections.abc import Iterable
from enum import StrEnum

from onion_wsn.core.exceptions import NoContributingNodesError
from onion_wsn.core.vm.carrier import COUNT_MAX, CarrierString, exact_sum
from onion_wsn.core.vm.opcodes import CarrierField


class AggregationKind(StrEnum):
    SUM = "SUM"
    AVG = "AVG"
    MAX = "MAX"
    VARIANCE = "VARIANCE"
    STD = "STD"


def initial_carrier(kind: AggregationKind) -> CarrierString:
    """The neutral carrier a circuit starts from."""
    if kind is AggregationKind.MAX:
        return CarrierString(acc1=-math.inf)
    return CarrierString()


def merge_carriers(kind: AggregationKind, carriers: Iterable[CarrierString]) -> CarrierString:
    """Combine partial carriers of one request: accumulators add, MAX takes the max.

    Sums are correctly rounded over each accumulator and its compensation
    term, so merging loses nothing the carriers still hold.
    """
    carriers = list(carriers)
    if not carriers:
        return initial_carrier(kind)
    if kind is AggregationKind.MAX:
        acc1 = max(c.acc1 for c in carriers)
    else:
        acc1 = exact_sum(v for c in carriers for v in (c.acc1, c.comp1))
    return CarrierString(
        acc1=acc1,
        acc2=exact_sum(v for c in carriers for v in (c.acc2, c.comp2)),
        count=min(sum(c.count for c in carriers), COUNT_MAX),
    )


def finalize(kind: AggregationKind, carrier: CarrierString) -> float:
    """Turn a merged carrier into the request's scalar result.

    Variance is the population variance acc2/count − (acc1/count)²; rounding
    can push it a hair below zero, so it is clamped at 0.

    Raises:
        NoContributingNodesError: count is 0 for AVG, MAX, VARIANCE or STD.
    """
    if carrier.count == 0 and kind is not AggregationKind.SUM:
        raise NoContributingNodesError(f"{kind} over zero contributing nodes")
    match kind:
        case AggregationKind.SUM:
            return carrier.total(CarrierField.ACC1)
        case AggregationKind.MAX:
            return carrier.acc1
        case AggregationKind.AVG:
            return carrier.total(CarrierField.ACC1) / carrier.count
        case AggregationKind.VARIANCE:
            return _variance(carrier)
        case AggregationKind.STD:
            return math.sqrt(_variance(carrier))


def _variance(carrier: CarrierString) -> float:
    mean = carrier.total(CarrierField.ACC1) / carrier.count
    return max(carrier.total(CarrierField.ACC2) / carrier.count - mean * mean, 0.0)
