"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes, so every user-facing failure should be
raised as one of the categories below rather than a bare ValueError.
"""

from __future__ import annotations


class HeldError(Exception):
    """Base class for all errors raised by this package."""


class InputFormatError(HeldError):
    """A file on disk could not be parsed (carries path and line number)."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        if path is not None and line is not None:
            message = f"{path}:{line}: {message}"
        elif path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class ValidationError(HeldError):
    """An in-memory value violates a structural invariant."""


class StalePositionError(ValidationError):
    """An insertion position no longer refers to the tree's rightmost branch."""


class ModelError(HeldError):
    """A model artifact is missing, incompatible, or unusable."""


class TrainingDiagnosticsError(ModelError):
    """Training left its sane regime (e.g. the epoch loss stopped decreasing)."""
