"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid or unsupported configuration value."""


class SplittingError(ValueError):
    """Constellation cannot be partitioned with the requested mode."""


class MappingError(ValueError):
    """Bit/label input does not fit the constellation region."""


class EstimatorFailure(RuntimeError):
    """An estimator could not produce an estimate for this trial."""
