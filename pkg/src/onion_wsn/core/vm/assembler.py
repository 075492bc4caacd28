"""Text assembler and disassembler for task bytecode.

One instruction per line, `#` starts a comment, `name:` defines a jump label::

    READ_STATUS light ON
    JMP_IF_FALSE done
    LOAD_W acc1
    READ_SENSOR temperature
    ADD
    STORE_W acc1
    done:
    HALT
"""

import re

from onion_wsn.core.exceptions import TaskValidationError
from onion_wsn.core.vm.interpreter import Task, validate
from onion_wsn.core.vm.opcodes import (
    CarrierField,
    Comparator,
    Opcode,
    Operand,
    decode,
    encode_instruction,
)

_LABEL = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*):$")
_JUMPS = (Opcode.JMP, Opcode.JMP_IF_FALSE)


def _parse_operand(opcode: Opcode, args: list[str], line_no: int) -> Operand:
    expected = {
        Opcode.PUSH_CONST: 1,
        Opcode.READ_SENSOR: 1,
        Opcode.READ_STATUS: 2,
        Opcode.CMP: 1,
        Opcode.LOAD_W: 1,
        Opcode.STORE_W: 1,
        Opcode.ACC_W: 1,
    }.get(opcode, 1 if opcode in _JUMPS else 0)
    if len(args) != expected:
        raise TaskValidationError(
            f"Line {line_no}: {opcode.name} takes {expected} operand(s), got {len(args)}"
        )
    try:
        match opcode:
            case Opcode.PUSH_CONST:
                return float(args[0])
            case Opcode.READ_SENSOR:
                return args[0]
            case Opcode.READ_STATUS:
                return (args[0], args[1])
            case Opcode.CMP:
                if args[0].upper() in Comparator.__members__:
                    return Comparator[args[0].upper()]
                return Comparator.from_symbol(args[0])
            case Opcode.LOAD_W | Opcode.STORE_W | Opcode.ACC_W:
                return CarrierField[args[0].upper()]
            case _:
                return None
    except (KeyError, ValueError) as e:
        raise TaskValidationError(f"Line {line_no}: bad operand {args!r}") from e


def assemble(source: str) -> Task:
    """Assemble task source text into a validated `Task`.

    Raises:
        TaskValidationError: Unknown mnemonic, bad operand, undefined label,
            or a program that fails validation.
    """
    parsed: list[tuple[Opcode, Operand, str | None, int]] = []
    labels: dict[str, int] = {}
    offset = 0
    for line_no, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if match := _LABEL.match(line):
            labels[match.group(1)] = offset
            continue
        mnemonic, *args = line.split()
        try:
            opcode = Opcode[mnemonic.upper()]
        except KeyError:
            raise TaskValidationError(f"Line {line_no}: unknown mnemonic {mnemonic!r}") from None
        jump_label: str | None = None
        if opcode in _JUMPS:
            if len(args) != 1:
                raise TaskValidationError(f"Line {line_no}: {opcode.name} takes one target")
            operand: Operand = int(args[0]) if args[0].isdigit() else 0
            jump_label = None if args[0].isdigit() else args[0]
        else:
            operand = _parse_operand(opcode, args, line_no)
        parsed.append((opcode, operand, jump_label, line_no))
        offset += len(encode_instruction(opcode, operand))

    code = bytearray()
    for opcode, operand, jump_label, line_no in parsed:
        if jump_label is not None:
            if jump_label not in labels:
                raise TaskValidationError(f"Line {line_no}: undefined label {jump_label!r}")
            operand = labels[jump_label]
        code += encode_instruction(opcode, operand)
    task = Task(bytecode=bytes(code))
    validate(task)
    return task


def disassemble(task: Task) -> str:
    """Render bytecode as assembler text that `assemble` reproduces exactly."""
    instructions = decode(task.bytecode)
    targets = {
        ins.operand for ins in instructions if ins.opcode in _JUMPS and isinstance(ins.operand, int)
    }
    lines: list[str] = []
    for ins in instructions:
        if ins.offset in targets:
            lines.append(f"L{ins.offset:04d}:")
        lines.append(f"    {ins.opcode.name}{_format_operand(ins.opcode, ins.operand)}")
    # A jump may target the end of the stream only in invalid code
    for target in sorted(t for t in targets if isinstance(t, int) and t >= len(task.bytecode)):
        lines.append(f"L{target:04d}:")
    return "\n".join(lines) + "\n"


def _format_operand(opcode: Opcode, operand: Operand) -> str:
    match opcode:
        case Opcode.PUSH_CONST:
            return f" {operand!r}"
        case Opcode.READ_SENSOR:
            return f" {operand}"
        case Opcode.READ_STATUS:
            assert isinstance(operand, tuple)
            return f" {operand[0]} {operand[1]}"
        case Opcode.CMP:
            assert isinstance(operand, Comparator)
            return f" {operand.name}"
        case Opcode.LOAD_W | Opcode.STORE_W | Opcode.ACC_W:
            assert isinstance(operand, CarrierField)
            return f" {operand.name.lower()}"
        case Opcode.JMP | Opcode.JMP_IF_FALSE:
            return f" L{operand:04d}"
        case _:
            return ""


def referenced_quantities(task: Task) -> frozenset[str]:
    """Every quantity label the task reads; what a task-holding node learns about its targets."""
    labels: set[str] = set()
    for ins in decode(task.bytecode):
        if ins.opcode is Opcode.READ_SENSOR and isinstance(ins.operand, str):
            labels.add(ins.operand)
        elif ins.opcode is Opcode.READ_STATUS and isinstance(ins.operand, tuple):
            labels.add(ins.operand[0])
    return frozenset(labels)
