"""What an adversary concludes, and how those conclusions are checked."""

import json
from collections import Counter
from collections.abc import Iterable
from enum import StrEnum
from pathlib import Path
from typing import TextIO

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from onion_wsn.core.netsim.trace import QueryTruth, Trace

READING_TOLERANCE = 1e-6


class AdversaryKind(StrEnum):
    EXTERNAL = "external"
    INTERNAL = "internal"


class AdversaryPolicy(StrEnum):
    ALWAYS = "always"
    """
    Two owned nodes around one confined node always assume they saw the same query.
    """

    MIXING_AWARE = "mixing_aware"
    """
    That assumption is marked suspected when another query passed either owned node in between.
    """


class Claim(StrEnum):
    PROCESSED_QUERY = "processed-query"
    IS_DECOY = "is-decoy"
    IS_TARGET = "is-target"
    QUANTITY_DISCLOSED = "quantity-disclosed"
    READING_DISCLOSED = "reading-disclosed"
    CONTRIBUTORS_DISCLOSED = "contributors-disclosed"


class CaseLabel(StrEnum):
    ROUTE = "route"
    EXTERNAL = "external"
    A = "a"
    B_I = "b-I"
    B_II = "b-II"
    B_III = "b-III"
    ENTRY = "entry"
    EXIT = "exit"


class AdversaryConfig(BaseModel):
    kind: AdversaryKind = AdversaryKind.INTERNAL
    owned: frozenset[int] = frozenset()
    policy: AdversaryPolicy = AdversaryPolicy.ALWAYS
    sink: int = 0

    model_config = ConfigDict(frozen=True)

    @field_validator("owned")
    @classmethod
    def validate_owned(cls, v: frozenset[int]) -> frozenset[int]:
        if any(node < 0 for node in v):
            raise ValueError("Node ids are non-negative")
        return v

    @model_validator(mode="after")
    def validate_sink(self) -> "AdversaryConfig":
        if self.sink in self.owned:
            raise ValueError("The sink cannot be owned by the adversary")
        if self.kind is AdversaryKind.EXTERNAL and self.owned:
            raise ValueError("An external adversary owns no nodes")
        return self


class Finding(BaseModel):
    """
    One conclusion about one node and one query.
    """

    query_id: str
    subject: int
    claim: Claim
    case: CaseLabel
    value: float | None = None
    """
    The disclosed reading or contributor count.
    """

    quantity: str | None = None
    """
    Sensed quantity, for quantity disclosures.
    """

    suspected: bool = False
    evidence_event_ids: list[int] = Field(default_factory=list)

    model_config = ConfigDict(frozen=True)

    @property
    def key(self) -> tuple[str, int, Claim]:
        return self.query_id, self.subject, self.claim


def dedupe(findings: Iterable[Finding]) -> list[Finding]:
    """Keep the first finding per (query, subject, claim)."""
    seen: set[tuple[str, int, Claim]] = set()
    unique = []
    for finding in findings:
        if finding.key not in seen:
            seen.add(finding.key)
            unique.append(finding)
    return unique


def write_findings(findings: Iterable[Finding], stream: TextIO) -> None:
    """Write one JSON object per line."""
    for finding in findings:
        stream.write(json.dumps(finding.model_dump(mode="json"), sort_keys=True))
        stream.write("\n")


def read_findings(path: Path) -> list[Finding]:
    with path.open(encoding="utf-8") as f:
        return [Finding.model_validate_json(line) for line in f if line.strip()]


def is_sound(finding: Finding, truth: QueryTruth) -> bool:
    """Whether `finding` agrees with what actually happened to the query."""
    subject = finding.subject
    match finding.claim:
        case Claim.PROCESSED_QUERY:
            return subject in truth.path
        case Claim.IS_DECOY:
            return subject in truth.path and subject not in truth.targets
        case Claim.IS_TARGET:
            return subject in truth.targets
        case Claim.QUANTITY_DISCLOSED:
            quantities = (finding.quantity or "").split(",")
            return subject in truth.targets and truth.quantity in quantities
        case Claim.READING_DISCLOSED:
            if subject not in truth.contributions or finding.value is None:
                return False
            expected = truth.contributions[subject]
            return abs(finding.value - expected) <= READING_TOLERANCE * max(1.0, abs(expected))
        case Claim.CONTRIBUTORS_DISCLOSED:
            return finding.value == len(truth.contributions)


class FindingScore(BaseModel):
    """
    Findings checked against ground truth; suspected findings are counted apart.
    """

    total: int = 0
    sound: int = 0
    unsound: int = 0
    suspected: int = 0
    suspected_unsound: int = 0
    by_claim: dict[str, int] = Field(default_factory=dict)
    by_case: dict[str, int] = Field(default_factory=dict)
    unsound_findings: list[Finding] = Field(default_factory=list)

    @property
    def accuracy(self) -> float:
        confirmed = self.total - self.suspected
        return 1.0 if confirmed == 0 else self.sound / confirmed


def score_findings(trace: Trace, findings: Iterable[Finding]) -> FindingScore:
    score = FindingScore()
    claims: Counter[str] = Counter()
    cases: Counter[str] = Counter()
    for finding in findings:
        score.total += 1
        claims[finding.claim.value] += 1
        cases[finding.case.value] += 1
        ok = is_sound(finding, trace.truth(finding.query_id))
        if finding.suspected:
            score.suspected += 1
            score.suspected_unsound += 0 if ok else 1
        elif ok:
            score.sound += 1
        else:
            score.unsound += 1
            score.unsound_findings.append(finding)
    score.by_claim = dict(sorted(claims.items()))
    score.by_case = dict(sorted(cases.items()))
    return score
