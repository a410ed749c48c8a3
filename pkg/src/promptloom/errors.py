"""Exception types shared across the package."""

from __future__ import annotations

from collections.abc import Iterable


class PromptLoomError(Exception):
    """Base class for all package errors."""


class NotFoundError(PromptLoomError):
    """A prompt id (local or hub) does not resolve to a stored record."""


class DuplicatePromptError(PromptLoomError):
    """A prompt with identical content (same derived id) is already stored."""


class ValidationFailedError(PromptLoomError):
    """A record failed validation; carries the violated invariants."""

    def __init__(self, violations: Iterable[str]):
        self.violations = tuple(violations)
        super().__init__("; ".join(self.violations) or "validation failed")


class StorageError(PromptLoomError):
    """Persistent state could not be read or written."""


class ConfigError(PromptLoomError):
    """Invalid runtime configuration (models, ports, paths)."""
