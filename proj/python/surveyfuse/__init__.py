"""Bayesian spatio-temporal hurdle models for fused fish-survey data.

The heavy lifting lives in the compiled extension; this package re-exports
the main operations.
"""

from ._core import (
    Mesh,
    NumericError,
    ValidationError,
    ar1_precision,
    back_transform,
    build_mesh,
    compute_waic,
    fit,
    matern_correlation,
    project_coordinates,
    projection_matrix,
    rms,
    sample_gmrf,
    scale_index,
    simulate_survey,
    spde_precision,
    split_hurdle,
)

__all__ = [
    "Mesh",
    "NumericError",
    "ValidationError",
    "ar1_precision",
    "back_transform",
    "build_mesh",
    "compute_waic",
    "fit",
    "matern_correlation",
    "project_coordinates",
    "projection_matrix",
    "rms",
    "sample_gmrf",
    "scale_index",
    "simulate_survey",
    "spde_precision",
    "split_hurdle",
]
