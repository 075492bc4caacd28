"""Line-oriented registry files.

Each non-blank, non-comment line describes one sensor node::

    address  pubkey_hex|-  location  quantity[=value][,quantity[=value]...]

A numeric value becomes the node's reading for that quantity, any other value
a discrete state (``light=ON``). ``-`` in the key column means the key pair is
derived from the deployment seed; a hex key must equal the derived one so the
local driver can emulate the node.
"""

from ipaddress import IPv4Address
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict

from onion_wsn.core.envelope import KeyPair, generate_keypair
from onion_wsn.core.exceptions import RegistryError
from onion_wsn.core.logger import logger
from onion_wsn.core.models.registry import Registry, RegistryEntry
from onion_wsn.core.vm.interpreter import SensorInterface


class Deployment(BaseModel):
    """
    A registry together with the emulated nodes behind it.
    """

    registry: Registry
    sensors: dict[IPv4Address, SensorInterface]
    keypairs: dict[IPv4Address, KeyPair]

    model_config = ConfigDict(frozen=True)


def derive_keypair(seed: int, address: IPv4Address) -> KeyPair:
    """Key pair of the node at `address` under deployment seed `seed`."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, int(address))))
    return generate_keypair(rng)


def _parse_quantities(field: str, line_no: int) -> tuple[set[str], dict[str, float], dict[str, str]]:
    quantities: set[str] = set()
    readings: dict[str, float] = {}
    statuses: dict[str, str] = {}
    for item in field.split(","):
        name, sep, value = item.strip().partition("=")
        if not name:
            raise RegistryError(f"Line {line_no}: empty quantity in {field!r}")
        quantities.add(name)
        if not sep:
            continue
        try:
            readings[name] = float(value)
        except ValueError:
            statuses[name] = value
    return quantities, readings, statuses


def parse_registry(text: str, seed: int) -> Deployment:
    """Parse registry text into a deployment.

    Raises:
        RegistryError: A line is malformed, an address repeats, or a listed key
            does not match the key derived from `seed`.
    """
    entries: list[RegistryEntry] = []
    sensors: dict[IPv4Address, SensorInterface] = {}
    keypairs: dict[IPv4Address, KeyPair] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise RegistryError(
                f"Line {line_no}: expected 'address pubkey|- location quantities', got {raw!r}"
            )
        address_text, key_text, location, quantity_text = parts
        try:
            address = IPv4Address(address_text)
        except ValueError as e:
            raise RegistryError(f"Line {line_no}: {e}") from e
        if address in keypairs:
            raise RegistryError(f"Line {line_no}: duplicate address {address}")

        keypair = derive_keypair(seed, address)
        if key_text != "-":
            try:
                listed = bytes.fromhex(key_text)
            except ValueError as e:
                raise RegistryError(f"Line {line_no}: public key is not hex") from e
            if listed != keypair.public_key:
                raise RegistryError(
                    f"Line {line_no}: public key of {address} does not match the deployment seed"
                )

        quantities, readings, statuses = _parse_quantities(quantity_text, line_no)
        entries.append(
            RegistryEntry(
                address=address,
                public_key=keypair.public_key,
                quantities=frozenset(quantities),
                location=location,
            )
        )
        sensors[address] = SensorInterface(readings=readings, statuses=statuses)
        keypairs[address] = keypair

    if not entries:
        raise RegistryError("Registry is empty")
    logger.debug("Loaded %d registry entries", len(entries))
    return Deployment(registry=Registry(entries=entries), sensors=sensors, keypairs=keypairs)


def load_registry(path: Path, seed: int) -> Deployment:
    """Read a registry file.

    Raises:
        FileNotFoundError: `path` does not exist.
        RegistryError: See `parse_registry`.
    """
    return parse_registry(path.read_text(encoding="utf-8"), seed)
