"""
Exception types shared by every pipeline stage.

Stage scripts catch GbiError (and OSError for unreadable files), print the
message and exit with status 1.
"""


class GbiError(Exception):
    """Base class for pipeline errors."""


class ParameterError(GbiError, ValueError):
    """A precondition or configuration value is out of range."""


class ImageFormatError(GbiError):
    """An input file has an unsupported or malformed format."""


class FitError(GbiError):
    """Mixture fitting could not run or misbehaved."""
