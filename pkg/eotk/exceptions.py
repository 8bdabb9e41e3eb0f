"""Exception hierarchy shared by the numerical core, the CLI and the HTTP routes."""

from typing import Any


class EotkError(Exception):
    """Base class for every error raised by eotk.

    Args:
        message: Human readable description
        diagnostics: Optional mapping with solver state, offending values, etc.
    """

    exit_code: int = 2

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None):
        super().__init__(message)
        self.message=message
        self.diagnostics=dict(diagnostics or {})

    def to_dict(self) -> dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "diagnostics": self.diagnostics,
        }


# ============== Input Errors (exit code 2) ==============


class ConfigError(EotkError):
    """Run configuration violates its schema; `path` names the offending field."""

    def __init__(self, message: str, path: str = "", diagnostics: dict[str, Any] | None = None):
        super().__init__(f"{path}: {message}" if path else message, diagnostics)
        self.path=path


class InputError(EotkError):
    """Unreadable or inconsistent input data (files, grids, arrays)."""


class DomainError(EotkError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DegenerateInputError(EotkError, ValueError):
    """Input for which the requested quantity is undefined (null field, zero density...)."""


class OutOfRegimeError(EotkError, ValueError):
    """Request outside the physical regime the model covers."""


# ============== Numerical Errors (exit code 3) ==============


class NumericalError(EotkError):
    """Root bracket, quadrature or integrator failure."""

    exit_code = 3


class FitQualityError(EotkError):
    """Fit did not converge or ended on a bound."""

    exit_code = 3
