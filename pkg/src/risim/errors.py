"""Exception types shared across the package."""


class RisimError(Exception):
    """Base class for all package errors."""


class DomainError(RisimError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class ContractError(RisimError, ValueError):
    """A caller violated a documented precondition (shape, membership, ...)."""


class CapacityError(RisimError, ValueError):
    """A request exceeds a configured size cap (e.g. partition order)."""


class ConvergenceError(RisimError, ArithmeticError):
    """A numerical procedure did not reach its tolerance.

    Attributes
    ----------
    estimate : float or None
        Best value available when the procedure gave up.
    residual : float or None
        Error estimate attached to ``estimate``.
    """

    def __init__(self, message, estimate=None, residual=None):
        super().__init__(message)
        self.estimate = estimate
        self.residual = residual
