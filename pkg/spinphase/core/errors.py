"""
spinphase/core/errors.py
--------------------------
Exception hierarchy. Each error carries the CLI exit code it maps to.
"""

from typing import Optional

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2
EXIT_VALIDATION = 3


class SpinPhaseError(Exception):
    """Base class for all package errors."""
    exit_code = EXIT_NUMERICAL


class UsageError(SpinPhaseError, ValueError):
    """Invalid argument combination (bad index, too few nodes, non-monotone sweep)."""


class DomainError(SpinPhaseError, ValueError):
    """Input outside the mathematical domain of an operation."""


class OutOfRangeError(SpinPhaseError, ValueError):
    """Time outside a drive table or trajectory grid."""


class IntegrationError(SpinPhaseError, RuntimeError):
    """The adaptive integrator could not proceed."""

    def __init__(self, message: str, t: Optional[float] = None):
        super().__init__(message if t is None else f"{message} (at t={t!r})")
        self.t = t


class ConsistencyError(SpinPhaseError, ArithmeticError):
    """Auxiliary equations violated where they were required to hold."""


class ConfigError(SpinPhaseError):
    """Scenario configuration problem, with optional file/line/key diagnostics."""
    exit_code = EXIT_CONFIG

    def __init__(self, message: str, key: Optional[str] = None,
                 line: Optional[int] = None, path: Optional[str] = None):
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.key = key
        self.line = line
        self.path = path
