"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Raised when a model or scenario description fails validation."""


class NumericalError(RuntimeError):
    """Raised when a certified numerical bound (norm, energy, step error) is violated."""
