"""freecrm Exceptions

Small hierarchy; every class carries the CLI exit code it maps to.
"""

from freecrm.constants import (
    EXIT_NUMERICAL,
    EXIT_PARSE,
    EXIT_THRESHOLD,
    EXIT_VALIDATION,
)


class FreeCrmError(Exception):
    """Base exception for all freecrm errors.

    Accepts arbitrary keyword arguments carrying structured context
    (e.g. report, estimate, error_bound, residual).
    """

    exit_code: int = 1

    def __init__(self, *args, **kwargs):
        super().__init__(*args)
        for key, value in kwargs.items():
            try:
                setattr(self, key, value)
            except Exception:
                pass
        self.context = kwargs or {}


class ParseError(FreeCrmError):
    """Raised when an input file, region string or grid string cannot be read."""

    exit_code = EXIT_PARSE


class ValidationError(FreeCrmError):
    """Raised when a measure, triplet, region or model violates an invariant."""

    exit_code = EXIT_VALIDATION


class DomainError(ValidationError):
    """Raised when an argument lies outside the half-plane an operation is defined on."""


class PreconditionError(ValidationError):
    """Raised when an operation's stated precondition does not hold."""


class NumericalError(FreeCrmError):
    """Raised when quadrature or the fixed-point solver fails to converge.

    Context usually includes ``estimate`` and ``error_bound`` (quadrature) or
    ``residual`` and ``iterations`` (solver).
    """

    exit_code = EXIT_NUMERICAL


class ThresholdError(FreeCrmError):
    """Raised when an oracle comparison exceeds the requested KS threshold."""

    exit_code = EXIT_THRESHOLD


__all__ = [
    "FreeCrmError",
    "ParseError",
    "ValidationError",
    "DomainError",
    "PreconditionError",
    "NumericalError",
    "ThresholdError",
]
