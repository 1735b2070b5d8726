"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid configuration or incompatible model architecture."""


class DataError(ValueError):
    """Malformed or unusable input data."""


class TrainingError(RuntimeError):
    """Numeric failure during training (non-finite loss or gradient)."""


class NumericOverflowError(TrainingError):
    """An exponent in the coverage penalty produced a non-finite value."""
