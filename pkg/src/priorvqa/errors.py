"""Exception taxonomy shared by the whole package.

Every error the library raises on purpose derives from PriorVqaError so
callers (CLI, service) can map error classes to exit codes / HTTP payloads
without string matching.
"""


class PriorVqaError(Exception):
    """Base class for all library errors."""


class DimensionError(PriorVqaError):
    """Tensor or feature shapes do not line up; message names both shapes."""


class ConfigError(PriorVqaError):
    """Invalid or malformed configuration value; message names the field."""


class ContractError(PriorVqaError):
    """A documented precondition was violated (empty input, non-scalar loss, ...)."""


class NonFiniteError(PriorVqaError):
    """A NaN or Inf appeared where only finite values are allowed."""


class UndefinedCorrelationError(PriorVqaError):
    """Correlation requested on data with zero variance."""


class TrainingDivergedError(PriorVqaError):
    """Training hit a non-finite state; carries the last finite snapshot."""

    def __init__(self, message, params=None, history=None):
        super().__init__(message)
        self.params = params
        self.history = history or []


class FormatError(PriorVqaError):
    """Base class for binary file format errors."""


class BadMagicError(FormatError):
    """File does not start with the expected magic bytes."""


class ChecksumError(FormatError):
    """Trailing CRC32 does not match the file contents."""


class TruncationError(FormatError):
    """File ends before the payload promised by its header."""


class ShapeOverflowError(FormatError):
    """Header declares extents that are zero or implausibly large."""


class VersionError(FormatError):
    """File carries an unsupported format version; message names both."""
