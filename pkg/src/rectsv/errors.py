"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid distribution parameters, constants, or experiment settings."""


class PreconditionError(ValueError):
    """A hypothesis of a construction does not hold for the given input.

    ``measured`` carries the offending quantity when one exists.
    """

    def __init__(self, message, measured=None):
        super().__init__(message)
        self.measured = measured


class DetectionError(PreconditionError):
    """No dyadic level passes the mass threshold."""

    def __init__(self, message, level_masses=None):
        super().__init__(message, measured=level_masses)
        self.level_masses = level_masses


class ResourceLimitError(RuntimeError):
    """A desk-scale guard (net size, dimension, support count) was exceeded."""
