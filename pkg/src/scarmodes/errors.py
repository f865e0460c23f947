"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid user-supplied parameters (bad ranges or parameter ordering)."""


class NumericalError(RuntimeError):
    """A numerical tolerance could not be met (e.g. basis truncation too coarse)."""
