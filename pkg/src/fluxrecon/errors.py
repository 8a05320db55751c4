"""Exception types shared across the package.

The CLI maps these to exit codes: configuration / input problems exit
with 2, numerical failures with 3.
"""


class FluxreconError(Exception):
    """Base class for package errors."""


class ConfigurationError(FluxreconError):
    """A config value is out of range or internally inconsistent."""


class InputError(FluxreconError):
    """Input data violates a documented precondition."""


class NumericalError(FluxreconError):
    """A numerical stage failed (divergence, degenerate data, ...)."""
