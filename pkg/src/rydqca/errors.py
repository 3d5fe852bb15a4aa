"""Exception hierarchy shared by every module.

Each class carries the CLI exit code it maps to.
"""

from __future__ import annotations


class RydqcaError(Exception):
    exit_code = 1


class ConfigurationError(RydqcaError, ValueError):
    exit_code = 2


class DomainError(ConfigurationError):
    """A parameter lies outside the domain where an operation is defined."""


class GeometryError(RydqcaError, ValueError):
    exit_code = 2


class NumericError(RydqcaError, ArithmeticError):
    exit_code = 3


class CompilationError(NumericError):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class LeakageError(NumericError):
    """Ancillas failed to return to the ground state within tolerance."""

    def __init__(self, message: str, leakage: float):
        super().__init__(message)
        self.leakage = leakage


class ResourceError(RydqcaError, MemoryError):
    exit_code = 4

    def __init__(self, message: str, size: int | None = None):
        super().__init__(message)
        self.size = size
