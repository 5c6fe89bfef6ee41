"""Exception types raised across the package."""

from __future__ import annotations


class PtaError(Exception):
    """Base class for all package errors."""


class DimensionError(PtaError, ValueError):
    """Operand shapes do not conform."""


class PreconditionError(PtaError, ValueError):
    """An input violates a documented precondition."""


class SingularityDomainError(PtaError, ValueError):
    """A singular system or gain was evaluated at or beyond its singular time."""


class CatalogError(PtaError, KeyError):
    """Unknown catalog system name."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class ParameterError(PtaError, ValueError):
    """Missing or invalid catalog/scenario parameter."""


class ConvergenceError(PtaError, ArithmeticError):
    """An iterative method exhausted its budget.

    ``best`` carries the best available iterate.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class QuadratureError(ConvergenceError):
    """Adaptive quadrature ran out of refinement budget."""


class StepSizeError(PtaError, ArithmeticError):
    """A finite-difference step is too coarse for the function being differentiated."""


class StiffnessError(PtaError, ArithmeticError):
    """The adaptive step size fell below the configured minimum.

    ``trajectory`` holds the accepted steps up to the failure.
    """

    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class NoSwitchError(PtaError, ArithmeticError):
    """The state norm never dropped to the switching threshold before the terminal gap."""

    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
