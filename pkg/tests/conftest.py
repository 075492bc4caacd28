from ipaddress import IPv4Address

import numpy as np
import pytest

from onion_wsn.core.envelope import KeyPair, generate_keypair
from onion_wsn.core.models.registry import Registry, RegistryEntry
from onion_wsn.core.netsim.topology import Topology, build_grid, build_line
from onion_wsn.core.vm.interpreter import SensorInterface


REGISTRY_TEXT = """\
# address    key  location  quantities
10.0.0.2     -    lab       temperature=1,light=ON
10.0.0.3     -    lab       temperature=2,light=OFF
10.0.0.4     -    lab       temperature=3,light=ON
10.0.0.5     -    hall      temperature=40
10.0.0.6     -    hall      temperature=50
10.0.0.7     -    store     humidity=30
10.0.0.8     -    store     humidity=35
10.0.0.9     -    roof      humidity=50
"""


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def sink_keypair() -> KeyPair:
    return generate_keypair(np.random.default_rng(0))


@pytest.fixture
def node_keypairs() -> dict[IPv4Address, KeyPair]:
    key_rng = np.random.default_rng(99)
    return {IPv4Address(f"10.0.0.{k}"): generate_keypair(key_rng) for k in range(2, 12)}


@pytest.fixture
def registry(node_keypairs: dict[IPv4Address, KeyPair]) -> Registry:
    """Ten nodes: the first five in lab, the rest in hall; all sense temperature."""
    return Registry(
        entries=[
            RegistryEntry(
                address=address,
                public_key=keypair.public_key,
                quantities=frozenset({"temperature", "light"}),
                location="lab" if i < 5 else "hall",
            )
            for i, (address, keypair) in enumerate(node_keypairs.items())
        ]
    )


@pytest.fixture
def sensors(node_keypairs: dict[IPv4Address, KeyPair]) -> dict[IPv4Address, SensorInterface]:
    """Node i reads temperature 20 + i; even nodes have the light ON."""
    return {
        address: SensorInterface(
            readings={"temperature": 20.0 + i},
            statuses={"light": "ON" if i % 2 == 0 else "OFF"},
        )
        for i, address in enumerate(node_keypairs)
    }


@pytest.fixture
def line_topology() -> Topology:
    return build_line(6)


@pytest.fixture
def grid_topology() -> Topology:
    return build_grid(25)


@pytest.fixture
def registry_text() -> str:
    return REGISTRY_TEXT
