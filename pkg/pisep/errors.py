"""Exception hierarchy shared by every pisep module."""

from typing import List, Optional


class PiSepError(Exception):
    """Root of all errors raised by pisep."""


class ValidationError(PiSepError, ValueError):
    """A value violates one of its data invariants."""

    def __init__(self, message: str, field: Optional[str] = None,
                 violations: Optional[List[str]] = None):
        super().__init__(message)
        self.field = field
        self.violations = list(violations) if violations else [message]


class ArgumentError(PiSepError, ValueError):
    """A required argument is missing or inconsistent with the others."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class BudgetError(PiSepError, RuntimeError):
    """An exhaustive search would exceed its configured budget."""

    def __init__(self, what: str, required: int, budget: int):
        super().__init__(f"{what}: search size {required} exceeds budget {budget}")
        self.what = what
        self.required = required
        self.budget = budget
