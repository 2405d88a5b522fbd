"""Exception hierarchy shared by every module."""

from __future__ import annotations


class BoxTransportError(Exception):
    """Base class for all package errors."""


class ParameterError(BoxTransportError, ValueError):
    """An input value is out of range. ``field`` names the offending input."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class DegenerateError(ParameterError):
    """The requested quantity is undefined for these rates (e.g. qD = 0)."""


class BracketError(BoxTransportError, ValueError):
    """Root search endpoints do not straddle a sign change."""


class ConvergenceError(BoxTransportError, RuntimeError):
    """An iterative method ran out of budget before meeting its tolerance."""
