"""Linear response of noisy dynamical systems via likelihood-ratio
(kernel-differentiation) estimators."""

from kdr._core import (
    CorrectionTerms,
    EstimatorDiagnostics,
    EstimatorResult,
    MonteCarloEstimate,
    NetworkForm,
    NetworkNoiseMode,
    Problem,
    build_ar1,
    build_network,
    build_tent,
    config_defaults_json,
    ergodic_estimator,
    fd_ensemble_response,
    finite_time_estimator,
    fit_theta,
    grid_linear_response,
    recommend_approximation,
    recommend_intrinsic,
    run_acceptance,
    run_sweep_json,
    stationary_density,
)

__all__ = [
    "CorrectionTerms",
    "EstimatorDiagnostics",
    "EstimatorResult",
    "MonteCarloEstimate",
    "NetworkForm",
    "NetworkNoiseMode",
    "Problem",
    "build_ar1",
    "build_network",
    "build_tent",
    "config_defaults_json",
    "ergodic_estimator",
    "fd_ensemble_response",
    "finite_time_estimator",
    "fit_theta",
    "grid_linear_response",
    "recommend_approximation",
    "recommend_intrinsic",
    "run_acceptance",
    "run_sweep_json",
    "stationary_density",
]

__version__ = "0.1.0"
