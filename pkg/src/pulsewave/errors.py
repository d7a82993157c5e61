"""Exception hierarchy shared across the package."""


class PulsewaveError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(PulsewaveError, ValueError):
    """An operation received an invalid argument value."""


class ConfigurationError(PulsewaveError, ValueError):
    """Scenario or experiment configuration is inconsistent."""


class GateError(PulsewaveError, ValueError):
    """Range gate selects no data."""


class DataFormatError(PulsewaveError):
    """Malformed input file.

    ``byte_offset`` is the file position at which parsing failed, when known.
    """

    def __init__(self, message: str, byte_offset: int | None = None):
        if byte_offset is not None:
            message = f"{message} (byte offset {byte_offset})"
        super().__init__(message)
        self.byte_offset = byte_offset


class NumericalError(PulsewaveError):
    """Numerical failure, e.g. a singular or rank-deficient matrix."""


class EstimationError(PulsewaveError):
    """An estimation stage could not produce a result."""
