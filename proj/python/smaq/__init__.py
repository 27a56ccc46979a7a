"""Semiparametric model averaging for quantile prediction."""

from ._smaq import (
    ConfigError,
    DataError,
    FitConfig,
    Method,
    Model,
    NumericalError,
    check_loss,
    epanechnikov,
    evaluate_mpe,
    example3_quantile,
    fit,
    generate_example1,
    generate_example2,
    generate_example3,
    pilot_bandwidth,
    quantile_bandwidth,
    run_monte_carlo,
    sample_error,
    scad_derivative,
    scad_value,
    univariate_quantile_min,
)

__all__ = [
    "ConfigError",
    "DataError",
    "FitConfig",
    "Method",
    "Model",
    "NumericalError",
    "check_loss",
    "epanechnikov",
    "evaluate_mpe",
    "example3_quantile",
    "fit",
    "generate_example1",
    "generate_example2",
    "generate_example3",
    "pilot_bandwidth",
    "quantile_bandwidth",
    "run_monte_carlo",
    "sample_error",
    "scad_derivative",
    "scad_value",
    "univariate_quantile_min",
]
