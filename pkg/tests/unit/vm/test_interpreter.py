import pytest

from onion_wsn.core.exceptions import SensorFaultError, TaskValidationError
from onion_wsn.core.vm.carrier import CarrierString
from onion_wsn.core.vm.interpreter import MAX_STACK_DEPTH, SensorInterface, Task, execute, validate
from onion_wsn.core.vm.opcodes import CarrierField, Comparator, Opcode, decode, encode_instruction


def _task(*program: tuple[Opcode, object]) -> Task:
    return Task(bytecode=b"".join(encode_instruction(op, arg) for op, arg in program))  # type: ignore[arg-type]


FOLD_TEMPERATURE = _task(
    (Opcode.LOAD_W, CarrierField.ACC1),
    (Opcode.READ_SENSOR, "temperature"),
    (Opcode.ADD, None),
    (Opcode.STORE_W, CarrierField.ACC1),
    (Opcode.LOAD_W, CarrierField.COUNT),
    (Opcode.PUSH_CONST, 1.0),
    (Opcode.ADD, None),
    (Opcode.STORE_W, CarrierField.COUNT),
    (Opcode.HALT, None),
)


@pytest.fixture
def warm_sensor() -> SensorInterface:
    return SensorInterface(readings={"temperature": 21.5}, statuses={"light": "ON"})


@pytest.mark.unit
def test_execute_folds_reading(warm_sensor: SensorInterface) -> None:
    # Arrange
    carrier = CarrierString(acc1=10.0, count=2)

    # Act
    result = execute(FOLD_TEMPERATURE, carrier, warm_sensor)

    # Assert
    assert not result.interrupted
    assert result.carrier == CarrierString(acc1=31.5, count=3)
    assert result.steps == 9


@pytest.mark.unit
def test_budget_exhaustion_leaves_carrier(warm_sensor: SensorInterface) -> None:
    # Arrange
    carrier = CarrierString(acc1=10.0, count=2)

    # Act
    result = execute(FOLD_TEMPERATURE, carrier, warm_sensor, budget=5)

    # Assert
    assert result.interrupted
    assert result.carrier == carrier
    assert result.steps == 5


@pytest.mark.unit
def test_endless_loop_is_interrupted(warm_sensor: SensorInterface) -> None:
    loop = _task((Opcode.JMP, 0), (Opcode.HALT, None))
    result = execute(loop, CarrierString(), warm_sensor, budget=100)
    assert result.interrupted
    assert result.steps == 100


@pytest.mark.unit
def test_status_condition(warm_sensor: SensorInterface) -> None:
    # IF light = ON THEN count += 1
    guard = encode_instruction(Opcode.READ_STATUS, ("light", "ON"))
    fold = b"".join(
        [
            encode_instruction(Opcode.LOAD_W, CarrierField.COUNT),
            encode_instruction(Opcode.PUSH_CONST, 1.0),
            encode_instruction(Opcode.ADD),
            encode_instruction(Opcode.STORE_W, CarrierField.COUNT),
        ]
    )
    end = len(guard) + 3 + len(fold)
    task = Task(bytecode=guard + encode_instruction(Opcode.JMP_IF_FALSE, end) + fold + encode_instruction(Opcode.HALT))

    on = execute(task, CarrierString(), warm_sensor)
    off = execute(task, CarrierString(), SensorInterface(statuses={"light": "OFF"}))

    assert on.carrier.count == 1
    assert off.carrier.count == 0


@pytest.mark.unit
def test_numeric_comparison(warm_sensor: SensorInterface) -> None:
    task = _task(
        (Opcode.READ_SENSOR, "temperature"),
        (Opcode.PUSH_CONST, 20.0),
        (Opcode.CMP, Comparator.GT),
        (Opcode.STORE_W, CarrierField.ACC2),
        (Opcode.HALT, None),
    )
    assert execute(task, CarrierString(), warm_sensor).carrier.acc2 == 1.0


@pytest.mark.unit
def test_missing_sensor_raises() -> None:
    with pytest.raises(SensorFaultError):
        execute(FOLD_TEMPERATURE, CarrierString(), SensorInterface())


@pytest.mark.unit
@pytest.mark.parametrize(
    "task, message",
    [
        (Task(bytecode=b""), "Empty task"),
        (_task((Opcode.ADD, None), (Opcode.HALT, None)), "underflow"),
        (_task((Opcode.PUSH_CONST, 1.0)), "falls off the end"),
        (_task((Opcode.JMP, 2), (Opcode.HALT, None)), "not an instruction boundary"),
        (Task(bytecode=b"\xff"), "Unknown opcode"),
        (Task(bytecode=bytes([Opcode.PUSH_CONST, 0, 0])), "Truncated"),
    ],
)
def test_validate_rejects(task: Task, message: str) -> None:
    with pytest.raises(TaskValidationError, match=message):
        validate(task)


@pytest.mark.unit
def test_validate_stack_depth_limit() -> None:
    pushes = [(Opcode.PUSH_CONST, 1.0)] * (MAX_STACK_DEPTH + 1)
    with pytest.raises(TaskValidationError, match="Stack deeper"):
        validate(_task(*pushes, (Opcode.HALT, None)))


@pytest.mark.unit
def test_validate_size_limit() -> None:
    with pytest.raises(TaskValidationError, match="exceeds"):
        validate(FOLD_TEMPERATURE, max_size=4)


@pytest.mark.unit
def test_validate_inconsistent_join() -> None:
    # One branch pushes before the join, the other does not
    task = _task(
        (Opcode.PUSH_CONST, 0.0),
        (Opcode.JMP_IF_FALSE, 21),
        (Opcode.PUSH_CONST, 1.0),
        (Opcode.HALT, None),
    )
    with pytest.raises(TaskValidationError, match="Inconsistent"):
        validate(task)


@pytest.mark.unit
def test_decode_offsets() -> None:
    instructions = decode(FOLD_TEMPERATURE.bytecode)
    assert [ins.opcode for ins in instructions][-1] is Opcode.HALT
    assert instructions[1].offset == 2
    assert instructions[1].operand == "temperature"
