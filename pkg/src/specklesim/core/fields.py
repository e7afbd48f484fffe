"""Complex wave-field samples on a transverse grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from .grids import TransverseGrid
from .regimes import RegimeScaling


@dataclass(eq=False)
class WaveField:
    """Complex amplitude samples u(z, .) on a periodic transverse grid.

    The squared l2 norm sum |u|^2 dx^d is an invariant of the unitary
    split-step propagation.
    """

    values: np.ndarray
    z: float
    grid: TransverseGrid
    scaling: RegimeScaling

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ConfigurationError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def norm_sq(self) -> float:
        """sum |u|^2 dx^d."""
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume)

    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def boundary_energy_fraction(self) -> float:
        """Energy fraction outside the central half of the domain (per axis)."""
        total = float(np.sum(np.abs(self.values) ** 2))
        if total == 0.0:
            return 0.0
        n = self.grid.n
        sl = tuple(slice(n // 4, 3 * n // 4) for _ in range(self.grid.d))
        central = float(np.sum(np.abs(self.values[sl]) ** 2))
        return 1.0 - central / total

    def copy(self) -> "WaveField":
        return WaveField(self.values.copy(), self.z, self.grid, self.scaling)
