"""Exception hierarchy for the onion query protocol, its simulator and analyses.

Errors that describe bad input (a malformed request, an oversized task, an
invalid config) also derive from `ValueError`, so callers may catch either the
domain type or the builtin. The CLI maps the `ValueError` family to exit code 2
and everything else to exit code 1.
"""


class OnionWsnError(Exception):
    """Root of every error raised by this package."""


# Envelope


class EnvelopeError(OnionWsnError):
    """A sealing or symmetric encryption operation failed."""


class AuthenticationError(EnvelopeError):
    """Ciphertext failed authentication: wrong key or tampered bytes."""


class PlaintextTooLargeError(EnvelopeError, ValueError):
    """Plaintext exceeds the largest layer the envelope accepts."""


# Onion


class OnionError(OnionWsnError):
    """A query head or body could not be built or parsed."""


class PathTooShortError(OnionError, ValueError):
    """Query paths need at least two nodes."""


class PathTooLongError(OnionError, ValueError):
    """The path does not fit the configured fixed head size."""


class UnknownNodeError(OnionError, LookupError):
    """A path node has no registry entry."""


class HeadTooLongError(OnionError, ValueError):
    """Peeled head material is longer than the fixed head size."""


class TaskTooLargeError(OnionError, ValueError):
    """Task bytecode does not fit in the body's task area."""


class MalformedLayerError(OnionError):
    """An authenticated layer or body decoded to an impossible layout."""


# Request translation


class RequestError(OnionWsnError, ValueError):
    """A request could not be turned into queries."""


class RequestSyntaxError(RequestError):
    """Request text does not match the request grammar."""

    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownAggregationError(RequestError):
    """The request names an aggregation the task compiler does not support."""


class NoMatchingNodesError(RequestError):
    """No registry node matches the request's locations and quantities."""


class InsufficientDecoysError(RequestError):
    """Not enough distinct non-target nodes to fill the decoy slots of a path."""


class RegistryError(OnionWsnError, ValueError):
    """A registry file or registry entry is invalid."""


# Task VM


class TaskError(OnionWsnError):
    """Base class for task execution problems."""


class TaskValidationError(TaskError, ValueError):
    """Bytecode failed static validation."""


class SensorFaultError(TaskError):
    """The task read a quantity the node does not sense."""


class NoContributingNodesError(TaskError, ValueError):
    """Finalising an aggregation that needs at least one contribution."""


# Runtime


class QueryRejectedError(OnionWsnError):
    """The sink refused a returning query."""


class UnknownQueryError(QueryRejectedError):
    """The returning query id is not part of the active request."""


class DuplicateQueryError(QueryRejectedError):
    """The returning query id was already collected."""


class StaleQueryError(QueryRejectedError):
    """The returning query id was retired by an abort."""


class QueryAbortedError(OnionWsnError):
    """A query did not reach its next hop in time."""

    def __init__(self, message: str, query_id: bytes) -> None:
        super().__init__(message)
        self.query_id = query_id


class MisroutedQueryError(QueryAbortedError):
    """A node dropped the query because its outer layer did not open."""


# Simulation and analysis


class RoutingError(OnionWsnError):
    """No route exists between two nodes."""


class ConfigError(OnionWsnError, ValueError):
    """Experiment configuration is missing or invalid."""


class TraceFormatError(OnionWsnError, ValueError):
    """A persisted trace could not be read."""
