"""Request language.

    request     = [ "IF" "(" quantity cmp literal ")" "THEN" ] agg "(" quantity ")"
                  "@" location { "," location }
    cmp         = "=" | "!=" | "<" | "<=" | ">" | ">="
    literal     = number | state
    agg         = "SUM" | "AVG" | "MAX" | "VARIANCE" | "STD"

Keywords and aggregation names are case-insensitive. Identifiers start with
a letter or underscore. A state literal (e.g. `ON`) only supports `=` and `!=`.

Example: ``IF(light=ON) THEN AVG(temperature) @ room237,laboratory2``
"""

import re
from typing import NamedTuple

from onion_wsn.core.exceptions import RequestSyntaxError, UnknownAggregationError
from onion_wsn.core.models.request import Aggregation, Condition, Operation, Request
from onion_wsn.core.vm.aggregation import AggregationKind
from onion_wsn.core.vm.opcodes import Comparator

_TOKEN_SPEC = [
    ("NUMBER", r"[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?(?![A-Za-z_])"),
    ("IDENT", r"[A-Za-z_][A-Za-z0-9_.\-]*"),
    ("CMP", r"<=|>=|!=|=|<|>"),
    ("LPAREN", r"\("),
    ("RPAREN", r"\)"),
    ("AT", r"@"),
    ("COMMA", r","),
    ("SKIP", r"\s+"),
    ("MISMATCH", r"."),
]
_TOKENIZER = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in _TOKEN_SPEC))


class Token(NamedTuple):
    kind: str
    text: str
    position: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    for match in _TOKENIZER.finditer(text):
        kind = match.lastgroup
        assert kind is not None
        if kind == "SKIP":
            continue
        if kind == "MISMATCH":
            raise RequestSyntaxError(f"Unexpected character {match.group()!r}", match.start())
        tokens.append(Token(kind, match.group(), match.start()))
    tokens.append(Token("EOF", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = tokenize(text)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def _advance(self) -> Token:
        token = self.current
        self.index += 1
        return token

    def _expect(self, kind: str, what: str) -> Token:
        token = self.current
        if token.kind != kind:
            found = token.text or "end of input"
            raise RequestSyntaxError(f"Expected {what}, found {found!r}", token.position)
        return self._advance()

    def _is_keyword(self, word: str) -> bool:
        return self.current.kind == "IDENT" and self.current.text.upper() == word

    def parse(self) -> Request:
        condition = None
        if self._is_keyword("IF"):
            self._advance()
            condition = self._condition()
        aggregation = self._aggregation()
        self._expect("AT", "'@' before the target locations")
        locations = [self._expect("IDENT", "a location").text]
        while self.current.kind == "COMMA":
            self._advance()
            locations.append(self._expect("IDENT", "a location").text)
        self._expect("EOF", "end of request")
        return Request(
            phi=Operation(condition=condition, aggregation=aggregation),
            tau=locations,
        )

    def _condition(self) -> Condition:
        self._expect("LPAREN", "'(' after IF")
        quantity = self._expect("IDENT", "a quantity").text
        cmp_token = self._expect("CMP", "a comparator")
        comparator = Comparator.from_symbol(cmp_token.text)
        literal_token = self.current
        literal: float | str
        if literal_token.kind == "NUMBER":
            literal = float(self._advance().text)
        elif literal_token.kind == "IDENT":
            literal = self._advance().text
            if comparator not in (Comparator.EQ, Comparator.NE):
                raise RequestSyntaxError(
                    f"State literal {literal!r} only supports '=' and '!='", cmp_token.position
                )
        else:
            raise RequestSyntaxError("Expected a number or a state literal", literal_token.position)
        self._expect("RPAREN", "')' closing the condition")
        if not self._is_keyword("THEN"):
            raise RequestSyntaxError("Expected THEN after the condition", self.current.position)
        self._advance()
        return Condition(quantity=quantity, comparator=comparator, literal=literal)

    def _aggregation(self) -> Aggregation:
        name = self._expect("IDENT", "an aggregation")
        if self.current.kind != "LPAREN":
            raise RequestSyntaxError(f"Expected '(' after {name.text!r}", self.current.position)
        try:
            kind = AggregationKind(name.text.upper())
        except ValueError:
            raise UnknownAggregationError(
                f"Unknown aggregation {name.text!r}; expected one of "
                + ", ".join(k.value for k in AggregationKind)
            ) from None
        self._advance()
        quantity = self._expect("IDENT", "a quantity").text
        self._expect("RPAREN", "')' closing the aggregation")
        return Aggregation(kind=kind, quantity=quantity)


def parse_request(text: str) -> Request:
    """Parse request text into (phi, tau).

    Raises:
        RequestSyntaxError: The text does not match the grammar; carries the position.
        UnknownAggregationError: The aggregation name is not supported.
    """
    if not text.strip():
        raise RequestSyntaxError("Empty request", 0)
    return _Parser(text).parse()
