"""Grid densities standing for finite signed measures on the dual space.

A measure over the (p+q)-dimensional dual space (d = 1 per factor) is held
as a complex density on the centered lattice v_i = (i - n/2) dv per axis;
its total-variation norm is sum |density| * cell volume.  Shifts used by the
coupling operators move mass by whole cells because the wavenumber
quadrature runs over the same lattice; mass shifted beyond the box is
dropped and tallied by the operator wrappers ("leaked TV").
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError


@dataclass(eq=False)
class GridMeasure:
    """Complex density over (p+q) dual axes with a common centered lattice."""

    values: np.ndarray
    extent: float
    p: int
    q: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != self.p + self.q:
            raise ConfigurationError(
                f"measure needs {self.p + self.q} axes, got {self.values.ndim}"
            )
        n = self.values.shape[0]
        if any(s != n for s in self.values.shape):
            raise ConfigurationError("all measure axes must share one lattice")
        if self.extent <= 0:
            raise ConfigurationError("extent must be positive")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dv(self) -> float:
        return self.extent / self.n

    @property
    def axis(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dv

    @property
    def cell_volume(self) -> float:
        return self.dv ** (self.p + self.q)

    def tv_norm(self) -> float:
        """Total variation: sum |density| * cell volume."""
        return float(np.sum(np.abs(self.values)) * self.cell_volume)

    def copy(self) -> "GridMeasure":
        return GridMeasure(self.values.copy(), self.extent, self.p, self.q)

    def zeros_like(self) -> "GridMeasure":
        return GridMeasure(np.zeros_like(self.values), self.extent, self.p, self.q)


def separable_measure(hat_values: np.ndarray, extent: float, p: int, q: int) -> GridMeasure:
    """Product measure prod_j u(xi_j) prod_l u*(zeta_l) from one axis profile."""
    hat_values = np.asarray(hat_values, dtype=complex)
    factors = [hat_values] * p + [np.conj(hat_values)] * q
    values = factors[0]
    for f in factors[1:]:
        values = np.multiply.outer(values, f)
    return GridMeasure(values, extent, p, q)
