"""Exception types shared across the package."""


class AdaptError(ValueError):
    """Base class for all package errors."""


class InvalidInput(AdaptError):
    """Input data is malformed, empty, or non-finite."""


class InvalidConfig(AdaptError):
    """A hyperparameter or configuration value is out of range."""


class ShapeMismatch(AdaptError):
    """Array shapes or lengths are incompatible."""
