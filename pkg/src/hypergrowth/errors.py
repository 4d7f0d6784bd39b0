"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid model parameters, CLI configuration, or input file."""


class NonConvergenceError(RuntimeError):
    """An iterative numerical procedure exhausted its iteration budget."""
