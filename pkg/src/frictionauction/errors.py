"""Exception hierarchy shared across the package.

Validation failures on caller-supplied data raise :class:`InvalidInputError`;
violations of guarantees the algorithms are supposed to maintain raise
:class:`InternalCheckError` (these indicate a bug, never bad input).
"""

from __future__ import annotations

__all__ = [
    "InvalidInputError",
    "InternalCheckError",
    "ModelViolationError",
    "NonterminationError",
    "NotSeparableError",
    "WrongModeError",
    "BudgetExceededError",
]


class InvalidInputError(ValueError):
    """Caller-supplied data violates a documented precondition."""


class InternalCheckError(RuntimeError):
    """A built-in consistency check failed; indicates a solver bug."""


class ModelViolationError(RuntimeError):
    """The market data contradicts a model assumption at solve time."""


class NonterminationError(RuntimeError):
    """The auction hit its iteration safety cap.

    Carries the partial trace for diagnosis.
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class NotSeparableError(InvalidInputError):
    """The marginal-payment matrix does not factor into buyer x good terms."""


class WrongModeError(InvalidInputError):
    """An operation restricted to a special payment mode was called outside it."""


class BudgetExceededError(InvalidInputError):
    """A brute-force referee refused an input larger than its budget."""

    def __init__(self, budget_name: str, needed, allowed):
        super().__init__(
            f"oracle budget exceeded: {budget_name} needs {needed}, allows {allowed}"
        )
        self.budget_name = budget_name
        self.needed = needed
        self.allowed = allowed
