"""Exception hierarchy shared by all tstar modules."""

from __future__ import annotations

from typing import Any


class TstarError(Exception):
    """Base class for every error raised by tstar."""


class ParameterError(TstarError, ValueError):
    """A parameter lies outside its admissible domain."""


class MomentsUndefinedError(TstarError, ValueError):
    """Requested moment does not exist for the given parameters."""


class NumericError(TstarError, ArithmeticError):
    """A numerical routine failed to reach its tolerance.

    ``diagnostics`` carries whatever the failing routine knows about the
    failure (residuals, iteration counts, offending abscissae).
    """

    def __init__(self, message: str, **diagnostics: Any) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics


class DegenerateSeriesError(TstarError, ValueError):
    """Series has zero variance or is too short for the requested statistic."""


class EstimationError(NumericError):
    """Moment system or regression could not be solved."""


class InsufficientTailError(EstimationError):
    """Too few exceedances above the tail threshold."""


class ParseError(TstarError, ValueError):
    """Malformed CSV or configuration input."""

    def __init__(self, message: str, rows: list[int] | None = None) -> None:
        super().__init__(message)
        self.rows = rows or []
