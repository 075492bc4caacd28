"""Sandboxed interpreter for aggregation tasks.

A task sees only two things: the node's `SensorInterface` and the carrier it
is folding into. Execution is bounded by a step budget; a task that runs out
of budget leaves the carrier untouched.
"""

from pydantic import BaseModel, ConfigDict, Field

from onion_wsn.core.exceptions import SensorFaultError, TaskValidationError
from onion_wsn.core.logger import logger
from onion_wsn.core.vm.carrier import CarrierString
from onion_wsn.core.vm.opcodes import (
    STACK_EFFECT,
    CarrierField,
    Comparator,
    Instruction,
    Opcode,
    decode,
)

MAX_STACK_DEPTH = 16
DEFAULT_STEP_BUDGET = 10_000


class Task(BaseModel):
    """
    Task bytecode shipped inside the query body.
    """

    bytecode: bytes
    """
    Raw instruction stream, see `onion_wsn.core.vm.opcodes`.
    """

    model_config = ConfigDict(frozen=True)

    def __len__(self) -> int:
        return len(self.bytecode)


class SensorInterface(BaseModel):
    """
    Read-only view of a node's sensors.
    """

    readings: dict[str, float] = Field(default_factory=dict)
    """
    Numeric readings per physical quantity.
    """

    statuses: dict[str, str] = Field(default_factory=dict)
    """
    Discrete states, e.g. light -> ON.
    """

    model_config = ConfigDict(frozen=True)

    def read(self, quantity: str) -> float:
        try:
            return self.readings[quantity]
        except KeyError:
            raise SensorFaultError(f"No sensor for quantity {quantity!r}") from None

    def status(self, label: str) -> str:
        try:
            return self.statuses[label]
        except KeyError:
            raise SensorFaultError(f"No status sensor {label!r}") from None

    @property
    def quantities(self) -> frozenset[str]:
        return frozenset(self.readings) | frozenset(self.statuses)


class ExecutionResult(BaseModel):
    """
    Outcome of one task execution.
    """

    carrier: CarrierString
    """
    Carrier after execution; the input carrier when interrupted.
    """

    interrupted: bool = False
    """
    True when the step budget ran out before HALT.
    """

    steps: int = 0
    """
    VM steps consumed.
    """


def validate(task: Task, max_size: int | None = None) -> list[Instruction]:
    """Statically check a task before it is run.

    Checks known opcodes and operand bounds, that jumps land on instruction
    boundaries, that control never falls off the end, and that the operand
    stack stays within [0, MAX_STACK_DEPTH] on every path.

    Returns:
        The decoded instructions.

    Raises:
        TaskValidationError: On the first violation found.
    """
    code = task.bytecode
    if max_size is not None and len(code) > max_size:
        raise TaskValidationError(f"Task of {len(code)} bytes exceeds {max_size}")
    if not code:
        raise TaskValidationError("Empty task")
    instructions = decode(code)
    index_of = {ins.offset: i for i, ins in enumerate(instructions)}

    depth_at: dict[int, int] = {0: 0}
    worklist = [0]
    while worklist:
        i = worklist.pop()
        ins = instructions[i]
        depth = depth_at[i]
        pops, pushes = STACK_EFFECT[ins.opcode]
        if depth < pops:
            raise TaskValidationError(f"Stack underflow at offset {ins.offset}")
        depth = depth - pops + pushes
        if depth > MAX_STACK_DEPTH:
            raise TaskValidationError(f"Stack deeper than {MAX_STACK_DEPTH} at offset {ins.offset}")

        successors: list[int] = []
        if ins.opcode is Opcode.HALT:
            continue
        if ins.opcode in (Opcode.JMP, Opcode.JMP_IF_FALSE):
            target = ins.operand
            assert isinstance(target, int)
            if target not in index_of:
                raise TaskValidationError(
                    f"Jump at offset {ins.offset} targets {target}, not an instruction boundary"
                )
            successors.append(index_of[target])
        if ins.opcode is not Opcode.JMP:
            if i + 1 >= len(instructions):
                raise TaskValidationError("Control falls off the end of the task")
            successors.append(i + 1)

        for succ in successors:
            known = depth_at.get(succ)
            if known is None:
                depth_at[succ] = depth
                worklist.append(succ)
            elif known != depth:
                raise TaskValidationError(
                    f"Inconsistent stack depth at offset {instructions[succ].offset}"
                )
    return instructions


def execute(
    task: Task,
    carrier: CarrierString,
    sensors: SensorInterface,
    budget: int = DEFAULT_STEP_BUDGET,
) -> ExecutionResult:
    """Run `task` against `carrier` and the node's sensors.

    Carrier writes are staged and committed only when HALT is reached.

    Raises:
        TaskValidationError: The task does not validate.
        SensorFaultError: The task read a quantity the node does not sense.
    """
    instructions = validate(task)
    index_of = {ins.offset: i for i, ins in enumerate(instructions)}
    staged = carrier
    stack: list[float] = []
    pc = 0
    steps = 0

    while True:
        if steps >= budget:
            logger.warning("Task interrupted after %d steps", steps)
            return ExecutionResult(carrier=carrier, interrupted=True, steps=steps)
        steps += 1
        ins = instructions[pc]
        pc += 1
        match ins.opcode:
            case Opcode.HALT:
                return ExecutionResult(carrier=staged, steps=steps)
            case Opcode.PUSH_CONST:
                assert isinstance(ins.operand, float)
                stack.append(ins.operand)
            case Opcode.READ_SENSOR:
                assert isinstance(ins.operand, str)
                stack.append(sensors.read(ins.operand))
            case Opcode.READ_STATUS:
                assert isinstance(ins.operand, tuple)
                label, expected = ins.operand
                stack.append(1.0 if sensors.status(label) == expected else 0.0)
            case Opcode.CMP:
                assert isinstance(ins.operand, Comparator)
                b, a = stack.pop(), stack.pop()
                stack.append(1.0 if ins.operand.apply(a, b) else 0.0)
            case Opcode.JMP_IF_FALSE:
                assert isinstance(ins.operand, int)
                if stack.pop() == 0.0:
                    pc = index_of[ins.operand]
            case Opcode.JMP:
                assert isinstance(ins.operand, int)
                pc = index_of[ins.operand]
            case Opcode.LOAD_W:
                assert isinstance(ins.operand, CarrierField)
                stack.append(staged.field(ins.operand))
            case Opcode.STORE_W:
                assert isinstance(ins.operand, CarrierField)
                staged = staged.with_field(ins.operand, stack.pop())
            case Opcode.ACC_W:
                assert isinstance(ins.operand, CarrierField)
                staged = staged.accumulate(ins.operand, stack.pop())
            case Opcode.ADD:
                b, a = stack.pop(), stack.pop()
                stack.append(a + b)
            case Opcode.MUL:
                b, a = stack.pop(), stack.pop()
                stack.append(a * b)
            case Opcode.MAX:
                b, a = stack.pop(), stack.pop()
                stack.append(max(a, b))
            case Opcode.DUP:
                stack.append(stack[-1])
