from dataclasses import dataclass


@dataclass
class QueryTestCase:
    """A request against config/registry.example and its plaintext answer.

    Attributes:
        request: Request text passed to `query --request`.
        expected: Value the sink should report.
        contributing: Number of target nodes that folded a reading in.
        path_length: Query path length n.
    """

    request: str
    expected: float
    contributing: int
    path_length: int = 3

    def args(self) -> list[str]:
        """Command line for this case."""
        return [
            "query",
            "--registry",
            "config/registry.example",
            "--request",
            self.request,
            "-n",
            str(self.path_length),
        ]


test_cases = [
    # lab: 21.5, 23.0, 19.0
    QueryTestCase(request="SUM(temperature) @ lab", expected=63.5, contributing=3),
    QueryTestCase(request="AVG(temperature) @ lab", expected=63.5 / 3, contributing=3, path_length=5),
    QueryTestCase(request="MAX(temperature) @ lab,hall", expected=23.0, contributing=5),
    # only 10.0.0.3 senses both
    QueryTestCase(request="IF(light=ON) THEN SUM(temperature) @ lab", expected=23.0, contributing=1),
    QueryTestCase(request="IF(humidity>50) THEN AVG(temperature) @ lab", expected=21.0, contributing=2),
    QueryTestCase(request="STD(temperature) @ hall", expected=0.25, contributing=2, path_length=2),
    QueryTestCase(request="avg(humidity) @ roof", expected=77.5, contributing=2),
]
