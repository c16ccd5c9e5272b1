# -*- coding: utf-8 -*-

from typing import Any, Optional


class QRetrieveError(Exception):
    """Base class for errors in the QRetrieve package."""


class BasisError(QRetrieveError):
    """Raised on invalid Fock bases or occupation configurations."""


class StateError(QRetrieveError):
    """
    Raised on invalid quantum states or failed state construction.

    When the failure comes from the uniqueness checks, the offending
    :class:`~qretrieve.statekit.StateReport` is available as
    :attr:`report`.
    """

    def __init__(self, message: str, report: Optional[Any] = None):
        super().__init__(message)
        self.report = report


class OpticsError(QRetrieveError):
    """Raised on invalid matrices or mismatched optical dimensions."""


class RetrievalError(QRetrieveError):
    """Raised on invalid phase-retrieval inputs or options."""


class NoiseError(QRetrieveError):
    """Raised on degenerate sampling or fitting inputs."""


class ConfigError(QRetrieveError):
    """Raised on invalid experiment configurations."""

    def __init__(
        self,
        message: Optional[str] = None,
        filename: Optional[str] = None,
        key: Optional[str] = None,
    ):
        self.message = message
        self.filename = filename
        self.key = key

    def __str__(self):
        parts = []
        if self.filename is not None:
            parts.append(f'File "{self.filename}"')
        if self.key is not None:
            parts.append(f'key {self.key!r}')
        context = ', '.join(parts)
        if self.message is None:
            return context
        if context:
            return f'{context}: {self.message}'
        return self.message
