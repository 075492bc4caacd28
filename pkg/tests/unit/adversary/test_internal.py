import math

import pytest

from onion_wsn.core.adversary.internal import internal_findings, reading_from_diff
from onion_wsn.core.exceptions import ConfigError
from onion_wsn.core.netsim.trace import Trace
from onion_wsn.core.vm.aggregation import AggregationKind
from onion_wsn.core.vm.carrier import CarrierString


@pytest.mark.unit
@pytest.mark.parametrize(
    "kind,before,after,reading",
    [
        (AggregationKind.SUM, CarrierString(acc1=10.0, count=2), CarrierString(acc1=31.5, count=3), 21.5),
        (
            AggregationKind.VARIANCE,
            CarrierString(acc1=4.0, acc2=16.0, count=1),
            CarrierString(acc1=1.0, acc2=25.0, count=2),
            -3.0,
        ),
        (AggregationKind.MAX, CarrierString(acc1=18.0, count=1), CarrierString(acc1=22.0, count=2), 22.0),
        (AggregationKind.MAX, CarrierString(acc1=-math.inf), CarrierString(acc1=17.0, count=1), 17.0),
    ],
)
def test_reading_from_one_fold(
    kind: AggregationKind, before: CarrierString, after: CarrierString, reading: float
) -> None:
    assert reading_from_diff(kind, before, after) == reading


@pytest.mark.unit
@pytest.mark.parametrize(
    "kind,before,after",
    [
        (AggregationKind.SUM, CarrierString(acc1=10.0, count=1), CarrierString(acc1=30.0, count=3)),
        (AggregationKind.SUM, CarrierString(acc1=10.0, count=1), CarrierString(acc1=10.0, count=1)),
        (AggregationKind.MAX, CarrierString(acc1=30.0, count=1), CarrierString(acc1=30.0, count=2)),
    ],
)
def test_reading_hidden(kind: AggregationKind, before: CarrierString, after: CarrierString) -> None:
    assert reading_from_diff(kind, before, after) is None


@pytest.mark.unit
def test_owning_the_sink_is_rejected() -> None:
    with pytest.raises(ConfigError, match="Invalid adversary"):
        internal_findings(Trace(), owned=[0, 4])


@pytest.mark.unit
def test_nothing_owned_nothing_found() -> None:
    assert internal_findings(Trace(), owned=[]) == []
