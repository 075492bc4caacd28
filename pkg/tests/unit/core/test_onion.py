from ipaddress import IPv4Address

import numpy as np
import pytest

from onion_wsn.core.envelope import KeyPair, generate_sym_key
from onion_wsn.core.exceptions import (
    AuthenticationError,
    HeadTooLongError,
    PathTooLongError,
    PathTooShortError,
    TaskTooLargeError,
    UnknownNodeError,
)
from onion_wsn.core.models.registry import Registry
from onion_wsn.core.onion import (
    HEADER_SIZE,
    body_size_for,
    build_body,
    build_head,
    head_size_for,
    open_body,
    peel,
    reencrypt_body,
    repad_head,
)
from onion_wsn.core.translator.path_selection import chain_keys
from onion_wsn.core.vm.carrier import CarrierString
from onion_wsn.core.vm.interpreter import Task

SINK_ADDRESS = IPv4Address("10.0.0.1")


@pytest.mark.unit
def test_header_and_query_sizes() -> None:
    assert HEADER_SIZE == 149
    assert head_size_for(5) == 6 * 149
    assert body_size_for(1280) == 2 + 1280 + 32 + 28
    with pytest.raises(PathTooShortError):
        head_size_for(1)


@pytest.mark.unit
def test_peeling_walks_the_whole_path(
    rng: np.random.Generator,
    registry: Registry,
    node_keypairs: dict[IPv4Address, KeyPair],
    sink_keypair: KeyPair,
) -> None:
    # Arrange
    path = registry.addresses()[:4]
    definition = chain_keys(path, [0, 2], rng)
    head = build_head(definition, SINK_ADDRESS, sink_keypair.public_key, registry, rng)
    size = len(head)

    # Act
    hops = []
    for address in path:
        peeled = peel(head, node_keypairs[address].private_key)
        hops.append(peeled)
        head = repad_head(peeled.inner, rng, size)
    terminal = peel(head, sink_keypair.private_key)

    # Assert
    assert size == head_size_for(4)
    assert [h.next_hop for h in hops] == [*path[1:], SINK_ADDRESS]
    assert [h.keys is not None for h in hops] == [True, False, True, False]
    assert hops[0].keys == definition.keys[0]
    assert all(len(h.inner) == size - HEADER_SIZE for h in hops)
    assert terminal.is_terminal
    assert terminal.query_id == definition.query_id


@pytest.mark.unit
def test_fixed_head_size_hides_path_length(
    rng: np.random.Generator, registry: Registry, sink_keypair: KeyPair
) -> None:
    short = chain_keys(registry.addresses()[:2], [0], rng)
    long = chain_keys(registry.addresses()[:6], [1], rng)
    fixed = head_size_for(8)

    a = build_head(short, SINK_ADDRESS, sink_keypair.public_key, registry, rng, fixed)
    b = build_head(long, SINK_ADDRESS, sink_keypair.public_key, registry, rng, fixed)

    assert len(a) == len(b) == fixed


@pytest.mark.unit
def test_head_too_small_for_path(
    rng: np.random.Generator, registry: Registry, sink_keypair: KeyPair
) -> None:
    definition = chain_keys(registry.addresses()[:5], [0], rng)
    with pytest.raises(PathTooLongError):
        build_head(definition, SINK_ADDRESS, sink_keypair.public_key, registry, rng, head_size_for(3))


@pytest.mark.unit
def test_unregistered_path_node(
    rng: np.random.Generator, registry: Registry, sink_keypair: KeyPair
) -> None:
    definition = chain_keys([registry.addresses()[0], IPv4Address("192.168.1.1")], [0], rng)
    with pytest.raises(UnknownNodeError):
        build_head(definition, SINK_ADDRESS, sink_keypair.public_key, registry, rng)


@pytest.mark.unit
def test_wrong_node_cannot_peel(
    rng: np.random.Generator,
    registry: Registry,
    node_keypairs: dict[IPv4Address, KeyPair],
    sink_keypair: KeyPair,
) -> None:
    path = registry.addresses()[:3]
    definition = chain_keys(path, [0], rng)
    head = build_head(definition, SINK_ADDRESS, sink_keypair.public_key, registry, rng)

    with pytest.raises(AuthenticationError):
        peel(head, node_keypairs[path[1]].private_key)


@pytest.mark.unit
def test_repad_rejects_long_inner(rng: np.random.Generator) -> None:
    assert len(repad_head(b"abc", rng, 10)) == 10
    with pytest.raises(HeadTooLongError):
        repad_head(bytes(11), rng, 10)


@pytest.mark.unit
def test_body_round_trip_and_reencryption(rng: np.random.Generator) -> None:
    # Arrange
    task = Task(bytecode=b"\x00")
    e_first, e_next = generate_sym_key(rng), generate_sym_key(rng)
    carrier = CarrierString(acc1=1.5, count=1)

    # Act
    body = build_body(task, carrier, e_first, rng, task_max=64)
    parts = open_body(body, e_first, task_max=64)
    updated = reencrypt_body(parts, CarrierString(acc1=4.0, count=2), e_next, rng)
    reopened = open_body(updated, e_next, task_max=64)

    # Assert
    assert len(body) == len(updated) == body_size_for(64)
    assert parts.task == task
    assert parts.carrier == carrier
    assert reopened.padding == parts.padding
    assert reopened.carrier == CarrierString(acc1=4.0, count=2)
    with pytest.raises(AuthenticationError):
        open_body(updated, e_first, task_max=64)


@pytest.mark.unit
def test_body_rejects_oversized_task(rng: np.random.Generator) -> None:
    with pytest.raises(TaskTooLargeError):
        build_body(Task(bytecode=bytes(65)), CarrierString(), generate_sym_key(rng), rng, task_max=64)
