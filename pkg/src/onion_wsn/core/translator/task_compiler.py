from onion_wsn.core.exceptions import TaskTooLargeError, UnknownAggregationError
from onion_wsn.core.models.request import Condition, Operation
from onion_wsn.core.vm.aggregation import AggregationKind
from onion_wsn.core.vm.interpreter import Task, validate
from onion_wsn.core.vm.opcodes import (
    CarrierField,
    Comparator,
    Opcode,
    Operand,
    encode_instruction,
)

Program = list[tuple[Opcode, Operand]]


def _condition_code(condition: Condition) -> Program:
    if isinstance(condition.literal, str):
        code: Program = [(Opcode.READ_STATUS, (condition.quantity, condition.literal))]
        if condition.comparator is Comparator.NE:
            code += [(Opcode.PUSH_CONST, 0.0), (Opcode.CMP, Comparator.EQ)]
        return code
    return [
        (Opcode.READ_SENSOR, condition.quantity),
        (Opcode.PUSH_CONST, condition.literal),
        (Opcode.CMP, condition.comparator),
    ]


def _increment_count() -> Program:
    return [
        (Opcode.LOAD_W, CarrierField.COUNT),
        (Opcode.PUSH_CONST, 1.0),
        (Opcode.ADD, None),
        (Opcode.STORE_W, CarrierField.COUNT),
    ]


def _fold_code(kind: AggregationKind, quantity: str) -> Program:
    match kind:
        case AggregationKind.SUM | AggregationKind.AVG:
            return [
                (Opcode.READ_SENSOR, quantity),
                (Opcode.ACC_W, CarrierField.ACC1),
                *_increment_count(),
            ]
        case AggregationKind.MAX:
            return [
                (Opcode.LOAD_W, CarrierField.ACC1),
                (Opcode.READ_SENSOR, quantity),
                (Opcode.MAX, None),
                (Opcode.STORE_W, CarrierField.ACC1),
                *_increment_count(),
            ]
        case AggregationKind.VARIANCE | AggregationKind.STD:
            return [
                (Opcode.READ_SENSOR, quantity),
                (Opcode.ACC_W, CarrierField.ACC1),
                (Opcode.READ_SENSOR, quantity),
                (Opcode.DUP, None),
                (Opcode.MUL, None),
                (Opcode.ACC_W, CarrierField.ACC2),
                *_increment_count(),
            ]
    raise UnknownAggregationError(f"Unsupported aggregation {kind}")


def compile_task(operation: Operation, task_max: int | None = None) -> Task:
    """Generate the task bytecode t for phi.

    The optional condition is evaluated first and skips the fold when false;
    the fold applies the aggregation's additive update to the carrier.

    Raises:
        UnknownAggregationError: The aggregation has no fold.
        TaskTooLargeError: The compiled task exceeds task_max bytes.
    """
    fold = _fold_code(operation.aggregation.kind, operation.aggregation.quantity)
    if operation.condition is None:
        body = [encode_instruction(op, arg) for op, arg in fold]
    else:
        guard = [encode_instruction(op, arg) for op, arg in _condition_code(operation.condition)]
        folded = [encode_instruction(op, arg) for op, arg in fold]
        jump_size = len(encode_instruction(Opcode.JMP_IF_FALSE, 0))
        end = sum(map(len, guard)) + jump_size + sum(map(len, folded))
        body = [*guard, encode_instruction(Opcode.JMP_IF_FALSE, end), *folded]
    task = Task(bytecode=b"".join(body) + encode_instruction(Opcode.HALT))
    if task_max is not None and len(task) > task_max:
        raise TaskTooLargeError(f"Compiled task of {len(task)} bytes exceeds L_t={task_max}")
    validate(task)
    return task
