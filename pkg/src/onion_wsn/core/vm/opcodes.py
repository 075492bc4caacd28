"""Bytecode instruction set and decoder.

Every instruction is one opcode byte followed by a fixed or length-prefixed
operand:

    HALT          0x00
    PUSH_CONST    0x01  f64 little-endian
    READ_SENSOR   0x02  u8 length ‖ UTF-8 quantity label
    READ_STATUS   0x03  u8 length ‖ label ‖ u8 length ‖ expected state
    CMP           0x04  u8 comparator
    JMP_IF_FALSE  0x05  u16 absolute target
    LOAD_W        0x06  u8 carrier field
    STORE_W       0x07  u8 carrier field
    ADD           0x08
    MUL           0x09
    MAX           0x0A
    DUP           0x0B
    JMP           0x0C  u16 absolute target
    ACC_W         0x0D  u8 carrier field
"""

import struct
from enum import IntEnum
from typing import NamedTuple

from onion_wsn.core.exceptions import TaskValidationError


class Opcode(IntEnum):
    HALT = 0x00
    PUSH_CONST = 0x01
    READ_SENSOR = 0x02
    READ_STATUS = 0x03
    CMP = 0x04
    JMP_IF_FALSE = 0x05
    LOAD_W = 0x06
    STORE_W = 0x07
    ADD = 0x08
    MUL = 0x09
    MAX = 0x0A
    DUP = 0x0B
    JMP = 0x0C
    ACC_W = 0x0D


class Comparator(IntEnum):
    EQ = 0
    NE = 1
    LT = 2
    LE = 3
    GT = 4
    GE = 5

    @property
    def symbol(self) -> str:
        return _COMPARATOR_SYMBOLS[self]

    @classmethod
    def from_symbol(cls, symbol: str) -> "Comparator":
        for comparator, text in _COMPARATOR_SYMBOLS.items():
            if text == symbol:
                return comparator
        raise ValueError(f"Unknown comparator {symbol!r}")

    def apply(self, a: float, b: float) -> bool:
        match self:
            case Comparator.EQ:
                return a == b
            case Comparator.NE:
                return a != b
            case Comparator.LT:
                return a < b
            case Comparator.LE:
                return a <= b
            case Comparator.GT:
                return a > b
            case Comparator.GE:
                return a >= b


_COMPARATOR_SYMBOLS = {
    Comparator.EQ: "=",
    Comparator.NE: "!=",
    Comparator.LT: "<",
    Comparator.LE: "<=",
    Comparator.GT: ">",
    Comparator.GE: ">=",
}


class CarrierField(IntEnum):
    ACC1 = 0
    ACC2 = 1
    COUNT = 2


# (values popped, values pushed)
STACK_EFFECT: dict[Opcode, tuple[int, int]] = {
    Opcode.HALT: (0, 0),
    Opcode.PUSH_CONST: (0, 1),
    Opcode.READ_SENSOR: (0, 1),
    Opcode.READ_STATUS: (0, 1),
    Opcode.CMP: (2, 1),
    Opcode.JMP_IF_FALSE: (1, 0),
    Opcode.LOAD_W: (0, 1),
    Opcode.STORE_W: (1, 0),
    Opcode.ADD: (2, 1),
    Opcode.MUL: (2, 1),
    Opcode.MAX: (2, 1),
    Opcode.DUP: (1, 2),
    Opcode.JMP: (0, 0),
    Opcode.ACC_W: (1, 0),
}

Operand = float | int | str | tuple[str, str] | Comparator | CarrierField | None


class Instruction(NamedTuple):
    offset: int
    opcode: Opcode
    operand: Operand
    size: int

    @property
    def next_offset(self) -> int:
        return self.offset + self.size


def _read_label(code: bytes, pos: int) -> tuple[str, int]:
    if pos >= len(code):
        raise TaskValidationError(f"Truncated label length at offset {pos}")
    length = code[pos]
    end = pos + 1 + length
    if length == 0 or end > len(code):
        raise TaskValidationError(f"Invalid label of length {length} at offset {pos}")
    try:
        return code[pos + 1 : end].decode("utf-8"), end
    except UnicodeDecodeError as e:
        raise TaskValidationError(f"Label at offset {pos} is not UTF-8") from e


def _need(code: bytes, pos: int, count: int) -> None:
    if pos + count > len(code):
        raise TaskValidationError(f"Truncated operand at offset {pos}")


def decode_instruction(code: bytes, offset: int) -> Instruction:
    """Decode the instruction starting at `offset`.

    Raises:
        TaskValidationError: Unknown opcode, truncated or out-of-range operand.
    """
    try:
        opcode = Opcode(code[offset])
    except ValueError as e:
        raise TaskValidationError(
            f"Unknown opcode 0x{code[offset]:02x} at offset {offset}"
        ) from e
    pos = offset + 1
    operand: Operand = None
    match opcode:
        case Opcode.PUSH_CONST:
            _need(code, pos, 8)
            (operand,) = struct.unpack_from("<d", code, pos)
            pos += 8
        case Opcode.READ_SENSOR:
            operand, pos = _read_label(code, pos)
        case Opcode.READ_STATUS:
            label, pos = _read_label(code, pos)
            state, pos = _read_label(code, pos)
            operand = (label, state)
        case Opcode.CMP:
            _need(code, pos, 1)
            try:
                operand = Comparator(code[pos])
            except ValueError as e:
                raise TaskValidationError(f"Unknown comparator at offset {pos}") from e
            pos += 1
        case Opcode.LOAD_W | Opcode.STORE_W | Opcode.ACC_W:
            _need(code, pos, 1)
            try:
                operand = CarrierField(code[pos])
            except ValueError as e:
                raise TaskValidationError(f"Unknown carrier field at offset {pos}") from e
            pos += 1
        case Opcode.JMP_IF_FALSE | Opcode.JMP:
            _need(code, pos, 2)
            (operand,) = struct.unpack_from("<H", code, pos)
            pos += 2
        case _:
            pass
    return Instruction(offset, opcode, operand, pos - offset)


def decode(code: bytes) -> list[Instruction]:
    """Linear sweep over the whole bytecode."""
    instructions: list[Instruction] = []
    offset = 0
    while offset < len(code):
        instruction = decode_instruction(code, offset)
        instructions.append(instruction)
        offset = instruction.next_offset
    return instructions


def encode_instruction(opcode: Opcode, operand: Operand = None) -> bytes:
    """Encode one instruction; the inverse of `decode_instruction`."""
    head = bytes([opcode])
    match opcode:
        case Opcode.PUSH_CONST:
            if not isinstance(operand, (int, float)):
                raise TaskValidationError("PUSH_CONST needs a numeric operand")
            return head + struct.pack("<d", float(operand))
        case Opcode.READ_SENSOR:
            if not isinstance(operand, str):
                raise TaskValidationError("READ_SENSOR needs a quantity label")
            return head + _encode_label(operand)
        case Opcode.READ_STATUS:
            if not isinstance(operand, tuple):
                raise TaskValidationError("READ_STATUS needs a label and a state")
            return head + _encode_label(operand[0]) + _encode_label(operand[1])
        case Opcode.CMP | Opcode.LOAD_W | Opcode.STORE_W | Opcode.ACC_W:
            if not isinstance(operand, int):
                raise TaskValidationError(f"{opcode.name} needs a one-byte operand")
            return head + bytes([int(operand)])
        case Opcode.JMP_IF_FALSE | Opcode.JMP:
            if not isinstance(operand, int) or not 0 <= operand <= 0xFFFF:
                raise TaskValidationError(f"{opcode.name} needs a u16 target")
            return head + struct.pack("<H", operand)
        case _:
            return head


def _encode_label(label: str) -> bytes:
    raw = label.encode("utf-8")
    if not 0 < len(raw) <= 255:
        raise TaskValidationError(f"Label {label!r} must be 1-255 bytes")
    return bytes([len(raw)]) + raw
