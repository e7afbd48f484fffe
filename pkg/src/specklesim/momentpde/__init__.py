"""Fourier-domain moment evolution: operators, Gaussian approximation, bounds."""

from .bounds import BoundRow, bound_check_linear, bound_check_quadratic
from .couplings import CouplingMatrices, build_couplings
from .evolve import (
    MomentEvolution,
    error_norm,
    evolve_full,
    evolve_gaussian_N,
    evolve_single_pair,
    exact_pair_solution,
    suggested_dz,
)
from .measures import GridMeasure, separable_measure
from .operators import apply_L1, apply_L2, damping_rate_l_eta

__all__ = [
    "BoundRow",
    "CouplingMatrices",
    "GridMeasure",
    "MomentEvolution",
    "apply_L1",
    "apply_L2",
    "bound_check_linear",
    "bound_check_quadratic",
    "build_couplings",
    "damping_rate_l_eta",
    "error_norm",
    "evolve_full",
    "evolve_gaussian_N",
    "evolve_single_pair",
    "exact_pair_solution",
    "separable_measure",
    "suggested_dz",
]
