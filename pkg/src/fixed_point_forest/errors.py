"""Exception types shared across the package."""


class ForestError(Exception):
    """Base class for all errors raised by this package."""


class PermutationError(ForestError, ValueError):
    """A sequence is not a bijection of {1..n}."""


class BasePermutationError(ForestError, ValueError):
    """sort_step was asked to move a permutation that is already a base."""


class InvalidBumpError(ForestError, ValueError):
    """bump was asked to move a position that is not a true fixed point."""


class BudgetExceededError(ForestError, RuntimeError):
    """A computation hit its configured work budget before finishing."""

    def __init__(self, message: str, budget: int | None = None):
        super().__init__(message)
        self.budget = budget


class SizeLimitError(ForestError, ValueError):
    """A requested object is larger than the configured maximum."""


class NotAnAtomError(ForestError, ValueError):
    """forward_map was given a point that is not in level 0."""


class CoincidentPointError(ForestError, ValueError):
    """Two points of a point-process family coincide."""
