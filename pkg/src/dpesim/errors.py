"""Exception types raised by the package."""


class DpesimError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(DpesimError):
    """Invalid or unknown configuration input.

    ``field`` carries the dotted section.key path of the offending entry
    when one can be named.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class IntegrationError(DpesimError):
    """Master-equation integration failed (for example step-size underflow)."""


class InvariantViolation(DpesimError):
    """A density matrix or trajectory sample broke a physical invariant."""


class DegenerateDataError(DpesimError):
    """Input data cannot constrain the requested fit or extraction."""


class GridError(DpesimError):
    """A scan grid is too coarse or otherwise unable to bracket a feature."""
