"""Exception hierarchy shared by every unida subpackage.

Each error derives from both `UnidaError` and the closest builtin so callers can catch either
the toolkit root or the conventional `ValueError`/`RuntimeError`.
"""

__all__ = [
    "UnidaError",
    "ShapeError",
    "TensorFormatError",
    "ValidationError",
    "CapacityError",
    "ConfigError",
    "DivergenceError",
    "NumericalError",
    "ConvergenceError",
]

from typing import Any


class UnidaError(Exception):
    """Root of all toolkit errors."""

    def details(self) -> dict[str, Any]:
        """Machine-readable description used by the CLI error report."""
        return {"error": self.__class__.__name__, "message": str(self)}


class ShapeError(UnidaError, ValueError):
    """Array extents are inconsistent with the requested operation."""


class TensorFormatError(UnidaError, ValueError):
    """An FDT1 container could not be decoded."""

    def __init__(self, field: str, message: str):
        super().__init__(f"Invalid tensor container field '{field}': {message}")
        self.field = field

    def details(self) -> dict[str, Any]:
        return {**super().details(), "field": self.field}


class ValidationError(UnidaError, ValueError):
    """A model or configuration object violates its invariants."""


class CapacityError(UnidaError, ValueError):
    """A request exceeds a configured size guard."""


class ConfigError(UnidaError, ValueError):
    """An experiment configuration is inconsistent."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key

    def details(self) -> dict[str, Any]:
        return {**super().details(), "key": self.key}


class DivergenceError(UnidaError, RuntimeError):
    """A state or loss became non-finite."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step

    def details(self) -> dict[str, Any]:
        return {**super().details(), "step": self.step}


class NumericalError(UnidaError, RuntimeError):
    """A linear-algebra operation failed, e.g. a singular innovation covariance."""

    def __init__(self, message: str, frame: int | None = None):
        super().__init__(message if frame is None else f"{message} (frame {frame})")
        self.frame = frame

    def details(self) -> dict[str, Any]:
        return {**super().details(), "frame": self.frame}


class ConvergenceError(UnidaError, RuntimeError):
    """An iterative solver exhausted its budget."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual

    def details(self) -> dict[str, Any]:
        return {**super().details(), "residual": self.residual}
