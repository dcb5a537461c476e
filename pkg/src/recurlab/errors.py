"""Exception hierarchy shared by all recurlab modules.

Each exception carries an ``exit_code`` used by the command-line driver.
"""


class RecurlabError(Exception):
    exit_code = 1


class ParameterError(RecurlabError, ValueError):
    """Invalid parameters or inputs (bad divisibility, malformed words, ...)."""

    exit_code = 2


class SizeError(ParameterError):
    """An enumeration would exceed its documented size guard."""


class ValidationError(ParameterError):
    """A table or word set violates its type invariants."""


class ModelError(RecurlabError):
    """The process model is unusable for the requested operation."""

    exit_code = 3


class EntropyError(ModelError):
    """The model has (numerically) zero entropy rate."""


class ConditioningError(ModelError):
    """Conditioning event has probability zero."""


class UndersampledError(ConditioningError):
    """Empirical conditioning produced too few accepted samples."""

    def __init__(self, message, hits):
        super().__init__(message)
        self.hits = hits


class NoCertificateError(RecurlabError):
    """All retries ended without a full binary tree."""

    exit_code = 4

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class VerificationError(RecurlabError):
    """A certificate or a constructed pair failed verification."""

    exit_code = 5


class CertificateError(VerificationError):
    """Structural violation in a tree certificate."""
