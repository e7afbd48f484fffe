"""Scaling regimes of the rescaled stochastic paraxial equation.

Two regimes are supported.  In the kinetic regime the long-range parameter
eta equals 1.  In the diffusive regime eta = 1/ln(ln(1/epsilon)), which is
only meaningful (eta in (0, 1]) for epsilon <= exp(-e) ~= 0.06599.  An
explicit ``eta_override`` is accepted for experiments probing how finite
(epsilon, eta) pairs emulate the asymptotic separation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import ConfigurationError

KINETIC = "kinetic"
DIFFUSIVE = "diffusive"

#: Largest epsilon for which the diffusive eta(epsilon) lies in (0, 1].
DIFFUSIVE_EPSILON_MAX = math.exp(-math.e)


def eta_for(regime: str, epsilon: float) -> float:
    """eta(epsilon) for the given regime; raises for inadmissible pairs."""
    if regime == KINETIC:
        return 1.0
    if regime == DIFFUSIVE:
        if not epsilon <= DIFFUSIVE_EPSILON_MAX:
            raise ConfigurationError(
                f"diffusive regime requires epsilon <= exp(-e) ~= "
                f"{DIFFUSIVE_EPSILON_MAX:.5f}, got {epsilon}"
            )
        return 1.0 / math.log(math.log(1.0 / epsilon))
    raise ConfigurationError(f"unknown regime {regime!r}")


@dataclass(frozen=True)
class RegimeScaling:
    """Regime parameters and the derived coefficients of the rescaled equation.

    Parameters
    ----------
    regime : str
        ``"kinetic"`` or ``"diffusive"``.
    epsilon : float
        Scale separation, in (0, 1).
    beta : float
        Source-width exponent, >= 1.
    k0 : float
        Carrier wavenumber.
    eta_override : float, optional
        Use this eta instead of the regime formula (experimentation hook).
    """

    regime: str
    epsilon: float
    beta: float
    k0: float
    eta_override: float | None = None

    def __post_init__(self):
        if self.regime not in (KINETIC, DIFFUSIVE):
            raise ConfigurationError(f"unknown regime {self.regime!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigurationError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.beta < 1.0:
            raise ConfigurationError(f"beta must be >= 1, got {self.beta}")
        if self.k0 <= 0.0:
            raise ConfigurationError(f"k0 must be positive, got {self.k0}")
        if self.eta_override is not None and not 0.0 < self.eta_override:
            raise ConfigurationError("eta_override must be positive")

    @property
    def eta(self) -> float:
        """eta(epsilon); raises ConfigurationError for inadmissible diffusive epsilon."""
        if self.eta_override is not None:
            return self.eta_override
        return eta_for(self.regime, self.epsilon)

    @property
    def laplacian_coeff(self) -> float:
        """Coefficient a of i*a*Laplacian in the rescaled equation: eta/(2 k0 eps)."""
        return self.eta / (2.0 * self.k0 * self.epsilon)

    @property
    def noise_gain(self) -> float:
        """Multiplier g of the Brownian increment in the phase factor: k0/(2 eta)."""
        return self.k0 / (2.0 * self.eta)

    def damping_rate(self, r0: float) -> float:
        """Deterministic amplitude decay rate k0^2 R(0) / (8 eta^2)."""
        return self.k0**2 * r0 / (8.0 * self.eta**2)
