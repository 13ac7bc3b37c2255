"""Exception hierarchy shared by every module."""


class PMLDAError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PMLDAError, ValueError):
    """An argument lies outside the mathematical domain of an operation.

    Raised for off-simplex memberships, non-positive scales, dimension
    mismatches and similar numeric contract violations.
    """


class ConfigError(PMLDAError, ValueError):
    """A run configuration failed validation."""


class FileFormatError(PMLDAError, OSError):
    """A file on disk does not follow the expected format."""
