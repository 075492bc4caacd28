from ipaddress import IPv4Address

from pydantic import BaseModel, ConfigDict, Field, model_validator

from onion_wsn.core.envelope import SK_LEN
from onion_wsn.core.vm.aggregation import AggregationKind
from onion_wsn.core.vm.carrier import COUNT_MAX, CarrierString, exact_sum
from onion_wsn.core.vm.opcodes import CarrierField


class LayerKeys(BaseModel):
    """
    The symmetric key pair revealed to a target node.
    """

    e_a: bytes
    """
    Key that opens the incoming body.
    """

    e_b: bytes
    """
    Key that seals the outgoing body.
    """

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def validate_keys(self) -> "LayerKeys":
        if len(self.e_a) != SK_LEN or len(self.e_b) != SK_LEN:
            raise ValueError(f"Layer keys are {SK_LEN} bytes")
        if self.e_a == self.e_b:
            raise ValueError("A target's two keys must differ")
        return self


class QueryDefinition(BaseModel):
    """
    The plan for one circuit: (S, K, e_F, e_L).
    """

    path: list[IPv4Address] = Field(alias="S", min_length=2)
    """
    Processing nodes in visiting order.
    """

    keys: list[LayerKeys | None] = Field(alias="K")
    """
    Key pair per path position; None marks a decoy.
    """

    e_first: bytes = Field(alias="e_F")
    """
    Key the sink encrypts the initial body with.
    """

    e_last: bytes = Field(alias="e_L")
    """
    Key the returning body is sealed with; doubles as the query identifier.
    """

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    @model_validator(mode="after")
    def validate_key_chain(self) -> "QueryDefinition":
        if len(self.path) != len(self.keys):
            raise ValueError("S and K must have the same length")
        if self.keys[-1] is not None:
            raise ValueError("The last node of a path is always a decoy")
        expected = self.e_first
        for k in self.keys:
            if k is None:
                continue
            if k.e_a != expected:
                raise ValueError("Key chain broken: e_a must equal the previous target's e_b")
            expected = k.e_b
        if expected != self.e_last:
            raise ValueError("e_L must be the last target's e_b (or e_F without targets)")
        return self

    @property
    def n(self) -> int:
        return len(self.path)

    @property
    def query_id(self) -> bytes:
        return self.e_last

    @property
    def target_positions(self) -> list[int]:
        """Zero-based positions whose layer carries keys."""
        return [i for i, k in enumerate(self.keys) if k is not None]

    @property
    def targets(self) -> list[IPv4Address]:
        return [self.path[i] for i in self.target_positions]


class CarrierOffset(BaseModel):
    """
    Random starting offsets the sink adds to a carrier and removes on return.
    """

    acc1: int = 0
    acc2: int = 0
    count: int = 0

    model_config = ConfigDict(frozen=True)

    def apply(self, carrier: CarrierString) -> CarrierString:
        shifted = carrier.accumulate(CarrierField.ACC1, self.acc1).accumulate(CarrierField.ACC2, self.acc2)
        return shifted.model_copy(update={"count": min(carrier.count + self.count, COUNT_MAX)})

    def remove(self, carrier: CarrierString) -> CarrierString:
        """Subtract the offsets from the compensated totals; the result carries no residual error term."""
        return CarrierString(
            acc1=exact_sum((carrier.acc1, carrier.comp1, -self.acc1)),
            acc2=exact_sum((carrier.acc2, carrier.comp2, -self.acc2)),
            count=max(carrier.count - self.count, 0),
        )


class RecoveryRules(BaseModel):
    """
    pi: which query ids make up a request and how to merge their carriers.
    """

    query_ids: list[bytes] = Field(default_factory=list)
    """
    e_L of every query issued for the request, in issue order.
    """

    merge_op: AggregationKind
    """
    Aggregation the partial carriers are merged and finalised with.
    """

    expected_count: int = Field(ge=0)
    """
    Number of queries whose carriers must return.
    """

    offsets: dict[bytes, CarrierOffset] = Field(default_factory=dict)
    """
    Entry offsets per query id; absent when entry mitigation is off.
    """

    def replace(self, old: bytes, new: bytes, offset: CarrierOffset | None) -> None:
        """Swap a reissued query's id in place."""
        self.query_ids[self.query_ids.index(old)] = new
        self.offsets.pop(old, None)
        if offset is not None:
            self.offsets[new] = offset


class Query(BaseModel):
    """
    A query on the wire: fixed-size head and body.
    """

    head: bytes
    body: bytes

    model_config = ConfigDict(frozen=True)

    @property
    def size(self) -> int:
        return len(self.head) + len(self.body)


class IssuedQuery(BaseModel):
    """
    A query ready to leave the sink.
    """

    first_hop: IPv4Address
    """
    s_1, the first processing node.
    """

    query: Query
    query_id: bytes


class RequestResult(BaseModel):
    """
    The merged answer to a request.
    """

    value: float
    """
    Finalised aggregation result.
    """

    kind: AggregationKind
    contributing: int
    """
    Number of target nodes whose reading was folded in.
    """

    queries: int
    """
    Number of queries the request needed.
    """

    reissued: int = 0
    """
    Number of queries aborted and reissued along the way.
    """

    def to_dict(self) -> dict[str, str | int | float]:
        return self.model_dump(mode="json")
