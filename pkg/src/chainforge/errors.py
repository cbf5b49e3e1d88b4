"""Shared exception types.

Every failure mode that callers are expected to branch on gets its own
class so the CLI can map them to stable exit codes.
"""

from __future__ import annotations


class ChainforgeError(Exception):
    """Base class for all package errors."""


class ParameterError(ChainforgeError, ValueError):
    """A argument violates a documented precondition."""


class GraphParseError(ChainforgeError, ValueError):
    """Malformed graph/link text input.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class BudgetExceededError(ChainforgeError, RuntimeError):
    """An enumeration or search exceeded its configured budget."""


class ConstructionInfeasibleError(ChainforgeError, RuntimeError):
    """No vertex partition satisfying the degree conditions was found.

    ``margins`` records the best (condition -> margin) values seen across
    all attempts, for diagnosis.
    """

    def __init__(self, message: str, margins: dict | None = None):
        self.margins = margins or {}
        super().__init__(message)


class SchemaError(ChainforgeError, ValueError):
    """CSV or config file does not match the documented schema."""


class InternalInvariantError(ChainforgeError, AssertionError):
    """An internal consistency check failed (always a bug, never input)."""
