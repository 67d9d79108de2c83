"""Exception hierarchy shared by every module."""


class FinslerError(Exception):
    """Base class for all package errors.

    Keyword arguments are kept in ``details`` for diagnostics.
    """

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details


class InputError(FinslerError, ValueError):
    """Bad arguments: wrong dimension, parameter outside its admissible window."""


class DomainError(FinslerError, ValueError):
    """A point or vector lies outside where the quantity is defined."""


class NumericError(FinslerError, ArithmeticError):
    """An iterative or numerical procedure failed to converge.

    ``details`` carries whatever diagnostics the failing routine had
    (residuals, last estimates, ...).
    """


class DivergenceError(NumericError):
    """An integral was detected to be infinite."""


class BoundViolation(FinslerError, AssertionError):
    """A checked inequality failed; ``worst`` names the offending sample."""

    def __init__(self, message, worst=None):
        super().__init__(message)
        self.worst = worst
