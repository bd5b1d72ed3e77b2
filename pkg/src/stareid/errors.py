"""
Exceptions raised across stareid.

Everything but the file error derives from ValueError, so callers that only
care about "bad input" can keep catching ValueError.
"""


class DimensionError(ValueError):
    """Shapes of the operands do not conform."""


class ConfigurationError(ValueError):
    """Run configuration, architecture or region split is invalid."""


class FormatError(ValueError):
    """A binary file (STAF, STAE, STAC) is malformed."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = "{} (at byte offset {})".format(message, offset)
        super().__init__(message)
        self.offset = offset


class VersionError(ValueError):
    """A checkpoint does not match the configuration it is used with."""


class EvaluationError(ValueError):
    """A function under gradient check produced a non-finite value."""


class StaFileError(OSError):
    """Writing an export failed."""
