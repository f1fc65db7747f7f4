"""Exception and warning types shared across the package."""


class CalibrationError(RuntimeError):
    """Window calibration against a model failed or is impossible."""


class UndefinedEstimateError(ValueError):
    """An estimator was asked for a quantity that is undefined on the input,
    e.g. the empirical mark distribution of an empty pattern."""


class EstimationError(RuntimeError):
    """A covariance estimator hit an input outside its numerical domain."""


class SingularCovarianceError(RuntimeError):
    """Covariance matrix could not be inverted reliably; tests must report an
    inconclusive outcome instead of fabricating a p-value."""


class BandwidthBoundWarning(UserWarning):
    """Bandwidth violates the hard window-geometry bound."""
