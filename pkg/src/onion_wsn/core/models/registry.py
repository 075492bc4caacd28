from collections.abc import Iterator
from ipaddress import IPv4Address

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PrivateAttr,
    field_validator,
    model_validator,
)

from onion_wsn.core.envelope import PK_LEN
from onion_wsn.core.exceptions import UnknownNodeError


class RegistryEntry(BaseModel):
    """
    What the sink knows about one sensor node after key registration.
    """

    address: IPv4Address
    """
    Node address, also its next-hop identifier in query heads.
    """

    public_key: bytes
    """
    Raw X25519 public key the node's head layers are sealed to.
    """

    quantities: frozenset[str] = Field(default_factory=frozenset)
    """
    Physical quantities (and discrete states) the node senses.
    """

    location: str
    """
    Location label, matched against a request's target locations.
    """

    model_config = ConfigDict(frozen=True)

    @field_validator("public_key")
    @classmethod
    def validate_public_key(cls, v: bytes) -> bytes:
        if len(v) != PK_LEN:
            raise ValueError(f"Public keys are {PK_LEN} bytes, got {len(v)}")
        return v


class Registry(BaseModel):
    """
    The set U of sensor nodes known to the sink, in registration order.
    """

    entries: list[RegistryEntry] = Field(default_factory=list)
    """
    Registered nodes; addresses are unique.
    """

    _index: dict[IPv4Address, RegistryEntry] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def validate_unique_addresses(self) -> "Registry":
        seen: set[IPv4Address] = set()
        for entry in self.entries:
            if entry.address in seen:
                raise ValueError(f"Duplicate registry address {entry.address}")
            seen.add(entry.address)
        return self

    def model_post_init(self, context: object, /) -> None:
        self._index = {entry.address: entry for entry in self.entries}

    def get(self, address: IPv4Address) -> RegistryEntry:
        try:
            return self._index[address]
        except KeyError:
            raise UnknownNodeError(f"No registry entry for {address}") from None

    def __contains__(self, address: object) -> bool:
        return address in self._index

    def __iter__(self) -> Iterator[RegistryEntry]:  # type: ignore[override]
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def addresses(self) -> list[IPv4Address]:
        return [entry.address for entry in self.entries]
