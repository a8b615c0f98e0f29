"""Exceptions raised by the StationPlot toolkit."""

from __future__ import annotations

from typing import Any

from .const import EXIT_DATA, EXIT_NUMERIC, EXIT_VALIDATION


class StationPlotError(Exception):
    """Base error; ``exit_code`` is what the CLI returns for it."""

    exit_code = EXIT_DATA

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.details = details

    def as_diagnostics(self) -> dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": str(self),
            "exit_code": self.exit_code,
            "details": {k: str(v) for k, v in sorted(self.details.items())},
        }


class ConfigValidationError(StationPlotError):
    """Configuration failed schema validation."""

    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, errors: dict[str, str] | None = None) -> None:
        super().__init__(message, **(errors or {}))
        self.errors = dict(errors or {})


class DataError(StationPlotError, ValueError):
    """Input data is unreadable, malformed or unusable."""

    exit_code = EXIT_DATA


class SignalTooShortError(DataError):
    """Signal has too few samples for the requested order or dimension."""


class DegenerateGeometryError(DataError):
    """Point set is collinear, coplanar or has too few distinct points."""


class NumericError(StationPlotError, ArithmeticError):
    """A numerical routine failed to produce a trustworthy value."""

    exit_code = EXIT_NUMERIC


class TrainingError(NumericError):
    """The SVM trainer could not be run on the given input."""
