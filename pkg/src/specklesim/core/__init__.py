"""Covariance models, regime scalings, grids, beams and wave fields."""

from .beams import BeamComponent, BeamSpec, GaussianEnvelope, eval_beam
from .covariance import (
    GAUSSIAN,
    TABULATED,
    CheckRecord,
    CovarianceModel,
    HypothesisReport,
    eval_covariance,
    eval_spectrum,
    hessian_at_zero,
    q_exponent,
    q_exponent_gaussian,
    q_kernel,
    validate_hypothesis,
)
from .fields import WaveField
from .grids import TransverseGrid, grid_ft, grid_ift
from .regimes import DIFFUSIVE, DIFFUSIVE_EPSILON_MAX, KINETIC, RegimeScaling

__all__ = [
    "BeamComponent",
    "BeamSpec",
    "CheckRecord",
    "CovarianceModel",
    "DIFFUSIVE",
    "DIFFUSIVE_EPSILON_MAX",
    "GAUSSIAN",
    "GaussianEnvelope",
    "HypothesisReport",
    "KINETIC",
    "RegimeScaling",
    "TABULATED",
    "TransverseGrid",
    "WaveField",
    "eval_beam",
    "eval_covariance",
    "eval_spectrum",
    "grid_ft",
    "grid_ift",
    "hessian_at_zero",
    "q_exponent",
    "q_exponent_gaussian",
    "q_kernel",
    "validate_hypothesis",
]
