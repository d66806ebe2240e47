"""Exception types shared across the harness."""

from __future__ import annotations


class CdharnessError(Exception):
    """Base class for all harness errors."""


class SelfLoopError(CdharnessError):
    """An edge points from a node to itself."""


class UnknownNodeError(CdharnessError):
    """An edge endpoint or referenced variable is not declared."""


class CycleError(CdharnessError):
    """A directed cycle was found where a DAG is required."""

    def __init__(self, cycle: list):
        self.cycle = list(cycle)
        super().__init__("directed cycle: " + " -> ".join(str(n) for n in self.cycle))


class ParseError(CdharnessError):
    """Malformed input text; carries a 1-based line/column location."""

    def __init__(self, message: str, line: int, column: int = 1):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class ValidationError(CdharnessError):
    """Structurally parseable input that violates a semantic constraint."""


class UnknownStateLabelError(CdharnessError):
    """A dataset cell holds a label outside its variable's state list."""


class DegenerateError(CdharnessError):
    """A statistic is undefined for the given state spaces (zero dof)."""


class EmptyDataError(CdharnessError):
    """An operation that needs observations received zero rows."""


class DomainError(CdharnessError):
    """Numeric argument outside the mathematical domain of a function."""


class SingularError(CdharnessError):
    """A residual or covariance collapsed below numerical tolerance."""


class TooFewColumnsError(CdharnessError):
    """A scenario transform needs more columns than remain."""


class RowCountError(CdharnessError):
    """More rows were requested than a dataset holds."""


class SeedOverlapError(CdharnessError):
    """Train and test seed ranges intersect."""


class EmptyGroupError(CdharnessError):
    """Aggregation was asked to group on keys no report carries."""


class IoError(CdharnessError):
    """Failure writing or reading a harness artifact file."""


class AuthError(CdharnessError):
    """A required API key is missing from the environment."""


class TimeoutError(CdharnessError):
    """A remote endpoint did not answer within the configured window."""


class RetryExhaustedError(CdharnessError):
    """All retry attempts against a remote endpoint failed."""


class MalformedResponseError(CdharnessError):
    """A remote endpoint answered with an unusable payload."""


class SpanMismatchError(CdharnessError):
    """A stored answer span does not reproduce the answer text."""
