from __future__ import annotations

from typing import List, Optional


class QSpeedError(Exception):
    """Base for every error raised by the workbench."""


class ValidationError(QSpeedError, ValueError):
    pass


class ArgumentError(ValidationError):
    pass


class UndefinedConditionalError(ValidationError):
    pass


class ResourceLimitError(QSpeedError, RuntimeError):
    pass


class AlgorithmFailure(QSpeedError, RuntimeError):
    """A retry or restart cap ran out; `attempts` is the trial log."""

    def __init__(self, message: str, attempts: Optional[List[dict]] = None):
        super().__init__(message)
        self.attempts: List[dict] = list(attempts or [])


class MissingTransition(QSpeedError, LookupError):
    """No transition for the current (state, symbol); the run is rejected."""
