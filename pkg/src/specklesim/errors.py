"""Exception types shared across the package."""


class SpeckleError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SpeckleError):
    """Invalid run configuration or violated operation precondition."""


class ModelError(SpeckleError):
    """A covariance model does not support the requested operation."""


class OutOfRangeError(ModelError):
    """Evaluation point outside the validity range of a tabulated model."""


class NumericError(SpeckleError):
    """A quadrature or solver failed to reach its accuracy target."""


class ResolutionError(ConfigurationError):
    """A grid cannot resolve the requested oscillation without aliasing."""


class InstabilityError(NumericError):
    """A time integration left its a-priori norm envelope."""


class SizeError(ConfigurationError):
    """A combinatorial or moment-order guard was exceeded."""
