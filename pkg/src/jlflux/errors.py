"""Exception hierarchy.

Every error carries a module-qualified ``code`` so the CLI can report where a
failure originated and map it onto an exit status.
"""

from __future__ import annotations


class JLFluxError(Exception):
    """Base class for all package errors."""

    code = "jlflux.error"
    exit_status = 3

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self) -> dict:
        return {"code": self.code, "message": str(self), "details": self.details}


class ParameterError(JLFluxError, ValueError):
    """Invalid problem parameters or configuration values."""

    code = "params.invalid"
    exit_status = 2


class PreconditionError(JLFluxError, ValueError):
    """An operation was called outside the parameter range it supports."""

    code = "precondition"
    exit_status = 2


class NumericalError(JLFluxError, ArithmeticError):
    """A numerical procedure failed to produce a trustworthy answer."""

    code = "numerical"


class QuadratureError(NumericalError):
    code = "quadrature.non_finite"


class IntegratorOverflow(NumericalError):
    code = "angular_profile.overflow"


class ConsistencyError(NumericalError):
    """A quantity that theory forces to have a sign or value did not."""

    code = "consistency"


class BracketError(NumericalError):
    code = "spectrum.bracket"


class ConvergenceError(NumericalError):
    code = "convergence"


class NewtonDivergence(NumericalError):
    code = "cylinder.newton"


class PositivityError(NumericalError):
    code = "cylinder.positivity"


class FitError(NumericalError):
    code = "modal.fit"
