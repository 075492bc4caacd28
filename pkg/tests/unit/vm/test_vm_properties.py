import itertools

import numpy as np
import pytest

from onion_wsn.core.exceptions import NoContributingNodesError, OnionWsnError
from onion_wsn.core.models.query import CarrierOffset
from onion_wsn.core.translator.dsl import parse_request
from onion_wsn.core.translator.task_compiler import compile_task
from onion_wsn.core.vm.aggregation import AggregationKind, finalize, initial_carrier, merge_carriers
from onion_wsn.core.vm.carrier import CarrierString
from onion_wsn.core.vm.interpreter import SensorInterface, Task, execute
from onion_wsn.core.vm.opcodes import CarrierField, Comparator, Opcode, Operand, encode_instruction

KINDS = list(AggregationKind)
ORACLES = {
    AggregationKind.SUM: np.sum,
    AggregationKind.AVG: np.mean,
    AggregationKind.MAX: np.max,
    AggregationKind.VARIANCE: np.var,
    AggregationKind.STD: np.std,
}


def _offset(kind: AggregationKind) -> CarrierOffset:
    return CarrierOffset(acc1=0 if kind is AggregationKind.MAX else 40503, acc2=61234, count=777)


def _fold(request_text: str, nodes: list[SensorInterface], offset: CarrierOffset | None = None) -> float:
    operation = parse_request(request_text).phi
    kind = operation.aggregation.kind
    task = compile_task(operation, 1280)
    carrier = initial_carrier(kind)
    if offset is not None:
        carrier = offset.apply(carrier)
    for sensors in nodes:
        carrier = execute(task, carrier, sensors).carrier
    if offset is not None:
        carrier = offset.remove(carrier)
    return finalize(kind, merge_carriers(kind, [carrier]))


@pytest.mark.unit
@pytest.mark.parametrize("kind", KINDS)
def test_result_does_not_depend_on_visiting_order(kind: AggregationKind) -> None:
    # Arrange
    readings = [0.1, 0.2, 0.3, 1e-4, 12345.678]
    expected = _fold(
        f"{kind}(temperature) @ lab",
        [SensorInterface(readings={"temperature": v}) for v in readings],
        _offset(kind),
    )

    # Act
    results = [
        _fold(
            f"{kind}(temperature) @ lab",
            [SensorInterface(readings={"temperature": v}) for v in order],
            _offset(kind),
        )
        for order in itertools.permutations(readings)
    ]

    # Assert
    assert all(r == pytest.approx(expected, rel=1e-12) for r in results)


@pytest.mark.unit
@pytest.mark.parametrize("with_offset", [False, True])
@pytest.mark.parametrize("kind", KINDS)
def test_every_subset_of_contributors_matches_direct_computation(
    kind: AggregationKind, with_offset: bool
) -> None:
    readings = [12.0, 15.5, 9.0, 20.0, 0.25, 31.0, 18.5, 22.75]
    offset = _offset(kind) if with_offset else None
    for mask in range(1 << len(readings)):
        # Arrange: node i contributes when bit i is set
        members = [i for i in range(len(readings)) if mask >> i & 1]
        nodes = [
            SensorInterface(readings={"temperature": v}, statuses={"light": "ON" if i in members else "OFF"})
            for i, v in enumerate(readings)
        ]
        request_text = f"IF(light=ON) THEN {kind}(temperature) @ lab"

        # Act & Assert
        if not members and kind is not AggregationKind.SUM:
            with pytest.raises(NoContributingNodesError):
                _fold(request_text, nodes, offset)
            continue
        expected = float(ORACLES[kind](np.array([readings[i] for i in members]))) if members else 0.0
        assert _fold(request_text, nodes, offset) == pytest.approx(expected, rel=1e-9, abs=1e-12), members


@pytest.mark.unit
@pytest.mark.parametrize("kind, expected", [("VARIANCE", 4.0), ("STD", 2.0)])
def test_textbook_population_variance(kind: str, expected: float) -> None:
    nodes = [SensorInterface(readings={"temperature": v}) for v in (2, 4, 4, 4, 5, 5, 7, 9)]
    assert _fold(f"{kind}(temperature) @ lab", nodes) == pytest.approx(expected, rel=1e-12)


def _random_operand(opcode: Opcode, rng: np.random.Generator) -> Operand:
    match opcode:
        case Opcode.PUSH_CONST:
            return float(rng.choice([0.0, 1.0, -2.5, 1e308, np.inf, np.nan]))
        case Opcode.READ_SENSOR:
            return str(rng.choice(["temperature", "humidity", "pressure"]))
        case Opcode.READ_STATUS:
            return (str(rng.choice(["light", "door"])), str(rng.choice(["ON", "OFF"])))
        case Opcode.CMP:
            return Comparator(int(rng.integers(0, len(Comparator))))
        case Opcode.LOAD_W | Opcode.STORE_W | Opcode.ACC_W:
            return CarrierField(int(rng.integers(0, len(CarrierField))))
        case _:
            return None


def _random_task(rng: np.random.Generator) -> Task:
    """Random instruction sequence; jumps land on instruction starts, then one byte may be mangled."""
    opcodes = [Opcode(int(v)) for v in rng.integers(0, len(Opcode), size=int(rng.integers(1, 24)))]
    operands = [_random_operand(op, rng) for op in opcodes]
    jump_size = len(encode_instruction(Opcode.JMP, 0))
    sizes = [
        jump_size if op in (Opcode.JMP, Opcode.JMP_IF_FALSE) else len(encode_instruction(op, arg))
        for op, arg in zip(opcodes, operands)
    ]
    starts = [0, *itertools.accumulate(sizes)][:-1]
    for i, op in enumerate(opcodes):
        if op in (Opcode.JMP, Opcode.JMP_IF_FALSE):
            operands[i] = starts[int(rng.integers(0, len(starts)))]
    code = bytearray(b"".join(encode_instruction(op, arg) for op, arg in zip(opcodes, operands)))
    if rng.random() < 0.3:
        code[int(rng.integers(0, len(code)))] = int(rng.integers(0, 256))
    return Task(bytecode=bytes(code))


@pytest.mark.unit
def test_random_bytecode_only_raises_package_errors() -> None:
    # Arrange
    rng = np.random.default_rng(2024)
    sensors = SensorInterface(readings={"temperature": 21.5, "humidity": 40.0}, statuses={"light": "ON"})
    carrier = CarrierString(acc1=3.0, acc2=9.0, count=1)
    budget = 200
    ran = 0

    for _ in range(3000):
        task = _random_task(rng)

        # Act
        try:
            result = execute(task, carrier, sensors, budget=budget)
        except OnionWsnError:
            continue

        # Assert
        ran += 1
        assert result.steps <= budget
        if result.interrupted:
            assert result.carrier == carrier
            assert result.steps == budget
    assert ran > 0
