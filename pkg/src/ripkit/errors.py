"""Exception hierarchy shared across ripkit."""


class RipkitError(Exception):
    """Base class for all ripkit errors."""


class InvalidInputError(RipkitError, ValueError):
    """Raised on malformed arguments (non-finite entries, bad shapes, ...)."""


class NotPositiveDefiniteError(RipkitError, ValueError):
    """Raised when a Cholesky factorization breaks down."""


class InfeasibleDivisionError(RipkitError, ValueError):
    """Raised when a sequence does not satisfy the division precondition."""


class BudgetExceededError(RipkitError):
    """Raised when an enumeration would exceed its configured budget."""


class OutOfRegimeError(RipkitError, ValueError):
    """Raised when a bound is requested outside its validity range."""


class InvalidWitnessError(RipkitError, ValueError):
    """Raised when a claimed null-space witness does not check out."""


class InfeasibleProblemError(RipkitError):
    """Raised when a recovery program has an empty feasible set."""
