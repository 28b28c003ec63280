"""Exception hierarchy shared across the package."""


class MaxoutError(Exception):
    """Base class for all package errors."""


class DimensionError(MaxoutError, ValueError):
    """Operand shapes are incompatible."""


class ConfigError(MaxoutError, ValueError):
    """A configuration value is invalid.

    ``field`` names the offending setting when it is known.
    """

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class StateError(MaxoutError, RuntimeError):
    """An operation was called without the cached state it needs."""


class DataError(MaxoutError, ValueError):
    """Input data violates its contract (bad label, wrong size, empty set)."""


class FormatError(DataError):
    """A binary container has the wrong magic number or layout."""


class LengthError(DataError):
    """A binary container is truncated or has trailing bytes."""

    def __init__(self, message, expected=None, actual=None):
        self.expected = expected
        self.actual = actual
        super().__init__(message)


class DivergenceError(MaxoutError, FloatingPointError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message, layer=None, epoch=None, batch=None):
        self.layer = layer
        self.epoch = epoch
        self.batch = batch
        details = ", ".join(
            f"{k}={v}" for k, v in (("layer", layer), ("epoch", epoch), ("batch", batch))
            if v is not None
        )
        super().__init__(f"{message} ({details})" if details else message)
