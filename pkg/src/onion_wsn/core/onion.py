"""Query head onion and query body construction.

Head layer i is a sealed fixed-size header followed by the rest of the head
under that layer's keystream::

    block_i   = seal(Y_i, header_i) ‖ stream(lk_i, block_i+1)
    header_i  = next hop (4) ‖ flag (1) ‖ e_a (32) ‖ e_b (32) ‖ lk_i (32)

Decoy headers zero-fill e_a and e_b. The innermost block is sealed to the sink
with the terminal flag and carries e_L in the e_a slot, so every block on the
wire starts with a header of the same size. Peeling strips HEADER_SIZE bytes
from the front and repadding appends HEADER_SIZE random bytes at the end; the
head therefore stays L_H bytes long at every hop and a node cannot tell how
deep in the path it sits.

Body plaintext is u16 task length ‖ task ‖ random padding to L_t ‖ carrier.
"""

import struct
from enum import IntEnum
from ipaddress import IPv4Address

import numpy as np
from pydantic import BaseModel, ConfigDict

from onion_wsn.core.envelope import (
    SEAL_OVERHEAD,
    SK_LEN,
    SYM_OVERHEAD,
    open_sealed,
    random_pad,
    seal,
    stream_xor,
    sym_decrypt,
    sym_encrypt,
)
from onion_wsn.core.exceptions import (
    HeadTooLongError,
    MalformedLayerError,
    PathTooLongError,
    PathTooShortError,
    TaskTooLargeError,
)
from onion_wsn.core.models.query import LayerKeys, QueryDefinition
from onion_wsn.core.models.registry import Registry
from onion_wsn.core.vm.carrier import CARRIER_SIZE, CarrierString
from onion_wsn.core.vm.interpreter import Task

ADDRESS_LEN = 4
HEADER_PLAINTEXT = ADDRESS_LEN + 1 + 3 * SK_LEN
HEADER_SIZE = HEADER_PLAINTEXT + SEAL_OVERHEAD
BODY_FRAMING = 2
DEFAULT_TASK_MAX = 1280
NO_ADDRESS = IPv4Address("0.0.0.0")
_ZERO_KEY = bytes(SK_LEN)
_HEADER = struct.Struct(f"<4sB{SK_LEN}s{SK_LEN}s{SK_LEN}s")


class LayerFlag(IntEnum):
    DECOY = 0
    TARGET = 1
    TERMINAL = 2


class PeelResult(BaseModel):
    """
    What a node learns from its own head layer.
    """

    next_hop: IPv4Address | None = None
    """
    Where to forward; None only for the terminal layer.
    """

    keys: LayerKeys | None = None
    """
    (e_a, e_b) when the peeling node is a target.
    """

    inner: bytes = b""
    """
    The remaining onion, HEADER_SIZE bytes shorter than the input head.
    """

    query_id: bytes | None = None
    """
    e_L; present only when the sink opens the terminal layer.
    """

    model_config = ConfigDict(frozen=True)

    @property
    def is_terminal(self) -> bool:
        return self.query_id is not None


class BodyPlaintext(BaseModel):
    """
    Decrypted body parts; padding is kept so re-encryption preserves it.
    """

    task: Task
    carrier: CarrierString
    padding: bytes

    model_config = ConfigDict(frozen=True)


def head_size_for(n: int) -> int:
    """L_H for a path of n nodes: n node layers plus the sink's terminal layer.

    Raises:
        PathTooShortError: n < 2.
    """
    if n < 2:
        raise PathTooShortError(f"Query paths need at least 2 nodes, got {n}")
    return (n + 1) * HEADER_SIZE


def body_size_for(task_max: int = DEFAULT_TASK_MAX) -> int:
    """L_B = framing + L_t + L_w + SYM_OVERHEAD."""
    return BODY_FRAMING + task_max + CARRIER_SIZE + SYM_OVERHEAD


def _pack_header(next_hop: IPv4Address, flag: LayerFlag, e_a: bytes, e_b: bytes, layer_key: bytes) -> bytes:
    return _HEADER.pack(next_hop.packed, flag, e_a, e_b, layer_key)


def build_head(
    definition: QueryDefinition,
    sink_address: IPv4Address,
    sink_public_key: bytes,
    registry: Registry,
    rng: np.random.Generator,
    head_size: int | None = None,
) -> bytes:
    """Build OR_1 for `definition`, innermost layer first.

    Args:
        definition: Path, keys and e_L.
        sink_address: Next hop written into the last node's layer.
        sink_public_key: Key the terminal layer is sealed to.
        registry: Source of every path node's public key.
        rng: Source of ephemeral keys, layer keys and padding.
        head_size: Fixed L_H. Defaults to head_size_for(n).

    Raises:
        UnknownNodeError: A path node is not registered.
        PathTooLongError: The path needs more than head_size bytes.
    """
    n = definition.n
    needed = head_size_for(n)
    size = needed if head_size is None else head_size
    if needed > size:
        raise PathTooLongError(
            f"A path of {n} nodes needs {needed} head bytes, the fixed head is {size}"
        )
    public_keys = [registry.get(address).public_key for address in definition.path]

    block = seal(
        sink_public_key,
        _pack_header(NO_ADDRESS, LayerFlag.TERMINAL, definition.e_last, _ZERO_KEY, _ZERO_KEY),
        rng,
    )
    for i in range(n - 1, -1, -1):
        next_hop = definition.path[i + 1] if i + 1 < n else sink_address
        keys = definition.keys[i]
        layer_key = rng.bytes(SK_LEN)
        if keys is None:
            header = _pack_header(next_hop, LayerFlag.DECOY, _ZERO_KEY, _ZERO_KEY, layer_key)
        else:
            header = _pack_header(next_hop, LayerFlag.TARGET, keys.e_a, keys.e_b, layer_key)
        block = seal(public_keys[i], header, rng) + stream_xor(layer_key, block)
    return block + random_pad(rng, size - len(block))


def peel(head: bytes, private_key: bytes) -> PeelResult:
    """Open the outer layer of `head` with `private_key`.

    Raises:
        AuthenticationError: The outer layer is not addressed to this key.
        MalformedLayerError: The layer authenticated but its fields are invalid.
    """
    header = open_sealed(private_key, head[:HEADER_SIZE])
    if len(header) != HEADER_PLAINTEXT:
        raise MalformedLayerError(f"Layer header of {len(header)} bytes")
    address, flag_byte, e_a, e_b, layer_key = _HEADER.unpack(header)
    try:
        flag = LayerFlag(flag_byte)
    except ValueError as e:
        raise MalformedLayerError(f"Unknown layer flag {flag_byte}") from e

    if flag is LayerFlag.TERMINAL:
        return PeelResult(query_id=e_a)
    keys = LayerKeys(e_a=e_a, e_b=e_b) if flag is LayerFlag.TARGET else None
    return PeelResult(
        next_hop=IPv4Address(address),
        keys=keys,
        inner=stream_xor(layer_key, head[HEADER_SIZE:]),
    )


def repad_head(inner: bytes, rng: np.random.Generator, head_size: int) -> bytes:
    """Append random bytes so the head is exactly `head_size` long again.

    Raises:
        HeadTooLongError: `inner` is already longer than `head_size`.
    """
    if len(inner) > head_size:
        raise HeadTooLongError(f"Inner head of {len(inner)} bytes exceeds {head_size}")
    return inner + random_pad(rng, head_size - len(inner))


def _body_plaintext(task: Task, carrier: CarrierString, padding: bytes) -> bytes:
    return struct.pack("<H", len(task)) + task.bytecode + padding + carrier.to_bytes()


def build_body(
    task: Task,
    carrier: CarrierString,
    e_first: bytes,
    rng: np.random.Generator,
    task_max: int = DEFAULT_TASK_MAX,
) -> bytes:
    """B = E_{e_F}(t, w, p), always body_size_for(task_max) bytes.

    Raises:
        TaskTooLargeError: The task exceeds task_max bytes.
    """
    if len(task) > task_max:
        raise TaskTooLargeError(f"Task of {len(task)} bytes exceeds L_t={task_max}")
    padding = random_pad(rng, task_max - len(task))
    return sym_encrypt(e_first, _body_plaintext(task, carrier, padding), rng)


def open_body(body: bytes, key: bytes, task_max: int = DEFAULT_TASK_MAX) -> BodyPlaintext:
    """Decrypt a body and split it into task, carrier and padding.

    Raises:
        AuthenticationError: Wrong key or tampered body.
        MalformedLayerError: The plaintext does not have the body layout.
    """
    plaintext = sym_decrypt(key, body)
    if len(plaintext) != BODY_FRAMING + task_max + CARRIER_SIZE:
        raise MalformedLayerError(f"Body plaintext of {len(plaintext)} bytes")
    (task_len,) = struct.unpack_from("<H", plaintext)
    if task_len > task_max:
        raise MalformedLayerError(f"Task length {task_len} exceeds L_t={task_max}")
    task_end = BODY_FRAMING + task_len
    pad_end = BODY_FRAMING + task_max
    return BodyPlaintext(
        task=Task(bytecode=plaintext[BODY_FRAMING:task_end]),
        padding=plaintext[task_end:pad_end],
        carrier=CarrierString.from_bytes(plaintext[pad_end:]),
    )


def reencrypt_body(parts: BodyPlaintext, carrier: CarrierString, e_b: bytes, rng: np.random.Generator) -> bytes:
    """B' = E_{e_b}(t, w', p): same task and padding, new carrier, fresh nonce."""
    return sym_encrypt(e_b, _body_plaintext(parts.task, carrier, parts.padding), rng)
