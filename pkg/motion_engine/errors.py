"""
Exception hierarchy for the motion engine.

Data and shape problems subclass ValueError so callers that already guard
against ValueError keep working. Binary file problems share FileFormatError
so the CLI can report them as I/O failures.
"""
from config import ConfigurationError  # noqa: F401


class ShapeError(ValueError):
    """Operand shapes do not agree."""


class InputError(ValueError):
    """Input values are unusable (for example NaN or Inf)."""


class EmptyInputError(ValueError):
    """An input has nothing to work on."""


class InvalidSizeError(ValueError):
    """A requested size is out of range."""


class EvaluationError(ValueError):
    """A function under test returned a non-finite value."""


class CacheMismatchError(RuntimeError):
    """A backward pass was given a cache from a different forward call."""


class MotionParseError(ValueError):
    """A text motion file could not be parsed."""


class FileFormatError(ValueError):
    """Base class for binary file validation failures."""


class BadMagicError(FileFormatError):
    pass


class UnsupportedVersionError(FileFormatError):
    pass


class TruncatedFileError(FileFormatError):
    pass


class ChecksumError(FileFormatError):
    pass
