"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value or malformed config file."""


class SamplingError(RuntimeError):
    """Batch sampling cannot satisfy its preconditions."""


class TrainingDiverged(RuntimeError):
    """Non-finite loss or gradient encountered during training."""
