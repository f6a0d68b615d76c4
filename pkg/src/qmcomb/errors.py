"""Exception hierarchy.

Every error raised by the library derives from :class:`QMCombError`, so
callers (the CLI in particular) can map failures onto exit codes without
catching unrelated exceptions.
"""

from __future__ import annotations


class QMCombError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(QMCombError, ValueError):
    """A parameter is outside its valid domain."""


class SingularSystemError(QMCombError, ArithmeticError):
    """The steady-state linear system has no solution."""


class PoleError(QMCombError, ArithmeticError):
    """The closed-form phase ratio was evaluated at a root of its denominator."""


class GridTooCoarseError(QMCombError, ArithmeticError):
    """Phase unwrapping cannot resolve the winding on this grid."""


class ContractViolationError(QMCombError, ValueError):
    """An input does not satisfy an operation's precondition."""


class NoSolutionError(QMCombError, ArithmeticError):
    """A root finder found no sign change in its search interval."""


class InvalidStepError(QMCombError, ValueError):
    """The time step violates the integrator's stability bound."""


class WindowTooShortError(QMCombError, ArithmeticError):
    """The response has not decayed by the end of the time window."""


class BudgetExceededError(QMCombError, RuntimeError):
    """The optimizer ran out of objective evaluations.

    ``best`` holds the best result found before the budget ran out.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
