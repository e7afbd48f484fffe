"""Periodic transverse grids and continuum-normalized Fourier helpers.

Fourier convention throughout the package:

    f_hat(xi) = int f(x) exp(-i xi.x) dx,
    f(x) = (2 pi)^-d int f_hat(xi) exp(i xi.x) dxi.

``grid_ft``/``grid_ift`` realize this convention on the centered lattice of a
:class:`TransverseGrid`, so sampled transforms can be compared directly with
analytic ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import ConfigurationError


@dataclass(frozen=True)
class TransverseGrid:
    """Periodic grid with n points per axis (power of two) on [-L/2, L/2)^d."""

    d: int
    n: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ConfigurationError(f"only d=1 and d=2 grids are supported, got d={self.d}")
        if self.n < 2 or (self.n & (self.n - 1)) != 0:
            raise ConfigurationError(f"grid.n must be a power of two >= 2, got {self.n}")
        if self.L <= 0:
            raise ConfigurationError(f"grid.L must be positive, got {self.L}")

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.dx**self.d

    @cached_property
    def x_axis(self) -> np.ndarray:
        """Centered physical lattice along one axis: (j - n/2) * dx."""
        return (np.arange(self.n) - self.n // 2) * self.dx

    @cached_property
    def xi_axis(self) -> np.ndarray:
        """Wavenumber lattice along one axis in FFT order, (2 pi / L) * {-n/2 .. n/2-1}."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def x_mesh(self) -> list[np.ndarray]:
        """Physical coordinate meshes, one (n,)*d array per axis."""
        axes = [self.x_axis] * self.d
        return list(np.meshgrid(*axes, indexing="ij"))

    def xi_mesh(self) -> list[np.ndarray]:
        """Wavenumber meshes in FFT order, one per axis."""
        axes = [self.xi_axis] * self.d
        return list(np.meshgrid(*axes, indexing="ij"))

    def xi_squared(self) -> np.ndarray:
        """|xi|^2 on the FFT-ordered dual grid."""
        mesh = self.xi_mesh()
        return sum(m**2 for m in mesh)

    def points(self) -> np.ndarray:
        """All grid points as an (n^d, d) array in row-major node order."""
        mesh = self.x_mesh()
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def index_to_point(self, idx: tuple[int, ...] | int) -> np.ndarray:
        """Physical coordinates of a node given per-axis indices."""
        if np.isscalar(idx):
            idx = (int(idx),)
        if len(idx) != self.d:
            raise ConfigurationError(f"expected {self.d} indices, got {idx!r}")
        for i in idx:
            if not 0 <= int(i) < self.n:
                raise ConfigurationError(f"grid index {idx!r} outside 0..{self.n - 1}")
        return np.array([self.x_axis[int(i)] for i in idx])


def grid_ft(grid: TransverseGrid, values: np.ndarray) -> np.ndarray:
    """Continuum-convention Fourier transform of samples on the grid.

    Output is indexed by the FFT-ordered lattice ``grid.xi_axis`` per axis.
    """
    out = np.fft.fftn(values, axes=tuple(range(-grid.d, 0)))
    x0 = grid.x_axis[0]
    for ax in range(grid.d):
        phase = np.exp(-1j * grid.xi_axis * x0)
        shape = [1] * values.ndim
        shape[values.ndim - grid.d + ax] = grid.n
        out = out * phase.reshape(shape)
    return out * grid.cell_volume


def grid_ift(grid: TransverseGrid, values_hat: np.ndarray) -> np.ndarray:
    """Inverse of :func:`grid_ft` (includes the (2 pi)^-d factor)."""
    tmp = np.asarray(values_hat, dtype=complex).copy()
    x0 = grid.x_axis[0]
    for ax in range(grid.d):
        phase = np.exp(1j * grid.xi_axis * x0)
        shape = [1] * tmp.ndim
        shape[tmp.ndim - grid.d + ax] = grid.n
        tmp = tmp * phase.reshape(shape)
    out = np.fft.ifftn(tmp, axes=tuple(range(-grid.d, 0)))
    return out / grid.cell_volume
