"""Exception types raised by proxcycle."""


class ProxCycleError(Exception):
    """Base class for all proxcycle errors."""


class DimensionMismatchError(ProxCycleError, ValueError):
    """Block counts or block dimensions do not agree."""


class ValidationError(ProxCycleError, ValueError):
    """A piece, problem, config or problem file violates an invariant."""


class UnsupportedKindError(ProxCycleError, TypeError):
    """The operation is not defined for this kind of convex piece."""


class ConvergenceError(ProxCycleError, RuntimeError):
    """An inner scalar solver hit its iteration cap."""


class BudgetExceededError(ProxCycleError, ValueError):
    """A brute-force search would exceed its evaluation budget."""
