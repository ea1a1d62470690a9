"""
Exception hierarchy for the solver.

Every error carries a short machine-readable ``code`` which the command line
front end prints as ``error=<CODE>`` before the human message.
"""

from typing import Dict, Optional


class FrackacError(Exception):
    """Base class for all solver errors."""

    code = "ERROR"


class DomainError(FrackacError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    code = "DOMAIN"


class NumericError(FrackacError, ArithmeticError):
    """An iteration failed to converge or a value overflowed."""

    code = "NUMERIC"

    def __init__(self, message: str, diagnostics: Optional[Dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostics:
            return base
        details = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
        return f"{base} ({details})"


class UsageError(FrackacError, ValueError):
    """Caller misuse: wrong dimension, point outside the domain, missing data."""

    code = "USAGE"


class ConfigurationError(FrackacError, ValueError):
    """Invalid configuration. ``field`` names the offending entry."""

    code = "CONFIG"

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class TrajectoryError(FrackacError, RuntimeError):
    """A simulated path exceeded its step budget."""

    code = "TRAJECTORY"


class AnalysisError(FrackacError, RuntimeError):
    """A convergence fit could not be formed."""

    code = "ANALYSIS"
