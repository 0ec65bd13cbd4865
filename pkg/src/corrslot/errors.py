"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid geometry, scheme name, config file field, or pattern input."""


class EstimationError(ValueError):
    """Statistics cannot be computed from the given observations."""


class CapabilityError(RuntimeError):
    """Operation requires a model capability (e.g. exact enumeration) it lacks."""
