"""Goodness-of-fit testing for the Palm mark distribution of stationary
marked point processes, with Boolean-model boundary simulation.

The package covers the full pipeline: simulate a direction-marked Cox
process on the boundary of a Boolean model, estimate the covariance matrix
of binned mark frequencies (edge-corrected, naive or kernel-smoothed), and
run asymptotic chi-square tests against a hypothesized mark distribution,
either from a single pattern (TMD) or against a fully specified null model
via Monte Carlo covariance estimation (MGM).
"""

__version__ = "0.1.0"

from .estimate import (
    Bandwidth,
    CovarianceEstimate,
    KernelSpec,
    bandwidth_from_c,
    intensity_hat,
    palm_hat,
    sigma1_hat,
    sigma2_hat,
    sigma3_hat,
    y_vector,
)
from .exceptions import (
    BandwidthBoundWarning,
    CalibrationError,
    EstimationError,
    SingularCovarianceError,
    UndefinedEstimateError,
)
from .geometry import Window, ellipse_perimeter, window_for_expected_points
from .gof import TestReport, invert_spd, mgm_test, monte_carlo_sigma, tmd_test
from .harness import (
    ErrorRateTable,
    ScenarioConfig,
    ScenarioRow,
    default_scenario,
    emit_table,
    read_table,
    run_scenario,
)
from .patterns import (
    MarkBins,
    MarkedPointPattern,
    NullMarkDistribution,
    fold_direction,
    make_bins,
)
from .chi2 import chi2_cdf, chi2_quantile, gamma_quantile, regularized_gamma_p
from .seeding import derive_seed
from .simulate import (
    BoundaryCoxConfig,
    Grain,
    ellipse_boundary_sampler,
    sample_germs,
    sample_grains,
    simulate_pattern,
    thin_covered,
)

__all__ = [
    "__version__",
    "Window", "ellipse_perimeter", "window_for_expected_points",
    "MarkBins", "MarkedPointPattern", "NullMarkDistribution",
    "fold_direction", "make_bins",
    "BoundaryCoxConfig", "Grain", "sample_germs", "sample_grains",
    "ellipse_boundary_sampler", "thin_covered", "simulate_pattern",
    "KernelSpec", "Bandwidth", "CovarianceEstimate", "bandwidth_from_c",
    "intensity_hat", "palm_hat", "y_vector",
    "sigma1_hat", "sigma2_hat", "sigma3_hat",
    "chi2_cdf", "chi2_quantile", "gamma_quantile", "regularized_gamma_p",
    "TestReport", "invert_spd", "tmd_test", "mgm_test", "monte_carlo_sigma",
    "ScenarioConfig", "ScenarioRow", "ErrorRateTable",
    "default_scenario", "run_scenario", "emit_table", "read_table",
    "derive_seed",
    "CalibrationError", "UndefinedEstimateError", "EstimationError",
    "SingularCovarianceError", "BandwidthBoundWarning",
]
