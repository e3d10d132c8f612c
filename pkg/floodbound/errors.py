"""
Exception hierarchy shared by every floodbound module.

Kernel functions raise plain ``ValueError`` for bad arguments; ingestion and
orchestration raise the subclasses below so the CLI can map them to exit codes.
"""

from __future__ import annotations

from typing import Optional


class FloodboundError(Exception):
    """Base class for all floodbound errors."""


class ValidationError(FloodboundError, ValueError):
    """
    Invalid input data or parameters.

    ``path`` and ``line`` locate the offending row when the error comes from a file
    (line 1 is the CSV header).
    """

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = None if path is None else str(path)
        self.line = line
        where = ""
        if self.path is not None:
            where = f"{self.path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class ConfigError(ValidationError):
    """Unsupported or inconsistent configuration."""


class NumericalError(FloodboundError, ArithmeticError):
    """Nonfinite weights, non-convergent inversion and similar numeric failures."""
