"""Incident beams: plane waves modulated by wide gaussian envelopes.

A beam is a finite superposition

    u0(x) = sum_m f_m(eps^beta x) exp(i k_m . x)

with pairwise distinct transverse wavevectors k_m and gaussian envelopes
f(y) = A exp(-|y - c|^2 / (2 w^2)).  The Fourier transform of u0 is
sum_m eps^(-d beta) f_hat_m(eps^-beta (xi - k_m)), whose L1 mass is
independent of eps; the plain-wide-beam case is the single component with
k = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, ResolutionError
from .grids import TransverseGrid
from .regimes import RegimeScaling

RAW = "raw"
RESCALED = "rescaled"


@dataclass(frozen=True, eq=False)
class GaussianEnvelope:
    """f(y) = amplitude * exp(-|y - center|^2 / (2 width^2))."""

    amplitude: complex
    width: float
    center: np.ndarray

    def __post_init__(self):
        if self.width <= 0:
            raise ConfigurationError("envelope width must be positive")
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))

    @property
    def d(self) -> int:
        return self.center.shape[0]

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.d == 1 and (y.ndim == 0 or y.shape[-1] != 1):
            y = y[..., np.newaxis]
        r2 = np.sum((y - self.center) ** 2, axis=-1)
        return self.amplitude * np.exp(-r2 / (2.0 * self.width**2))

    def ft(self, xi) -> np.ndarray:
        """f_hat(xi) = A (2 pi w^2)^(d/2) exp(-w^2 |xi|^2 / 2) exp(-i xi.c)."""
        xi = np.asarray(xi, dtype=float)
        if self.d == 1 and (xi.ndim == 0 or xi.shape[-1] != 1):
            xi = xi[..., np.newaxis]
        amp = self.amplitude * (2.0 * math.pi * self.width**2) ** (self.d / 2.0)
        q2 = np.sum(xi**2, axis=-1)
        phase = np.sum(xi * self.center, axis=-1)
        return amp * np.exp(-self.width**2 * q2 / 2.0) * np.exp(-1j * phase)

    def ft_l1(self) -> float:
        """(2 pi)^-d integral of |f_hat| (equals |A| for a gaussian envelope)."""
        return abs(self.amplitude)


@dataclass(frozen=True, eq=False)
class BeamComponent:
    envelope: GaussianEnvelope
    kvec: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kvec", np.atleast_1d(np.asarray(self.kvec, dtype=float)))
        if self.kvec.shape[0] != self.envelope.d:
            raise ConfigurationError("component kvec dimension does not match envelope")


@dataclass(frozen=True, eq=False)
class BeamSpec:
    """Superposition of plane waves modulated by wide sources."""

    components: tuple[BeamComponent, ...]
    beta: float
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ConfigurationError("a beam needs at least one component")
        if self.beta < 1.0:
            raise ConfigurationError("beam beta must be >= 1")
        if not 0.0 < self.epsilon <= 1.0:
            raise ConfigurationError("beam epsilon must lie in (0, 1]")
        kvecs = [tuple(c.kvec) for c in self.components]
        if len(set(kvecs)) != len(kvecs):
            raise ConfigurationError("component wavevectors must be pairwise distinct")

    @property
    def d(self) -> int:
        return self.components[0].envelope.d

    @property
    def is_plane_wave_superposition(self) -> bool:
        """True when any component carries a nonzero wavevector or there are several."""
        return len(self.components) > 1 or bool(np.any(self.components[0].kvec != 0.0))

    def kmax(self) -> float:
        return max(float(np.linalg.norm(c.kvec)) for c in self.components)

    def sample_raw(self, x) -> np.ndarray:
        """u0(x) = sum_m f_m(eps^beta x) e^{i k_m.x} at points of shape (..., d)."""
        x = np.asarray(x, dtype=float)
        if self.d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., np.newaxis]
        scale = self.epsilon**self.beta
        out = np.zeros(x.shape[:-1], dtype=complex)
        for comp in self.components:
            phase = np.sum(x * comp.kvec, axis=-1)
            out = out + comp.envelope(scale * x) * np.exp(1j * phase)
        return out

    def ft(self, xi) -> np.ndarray:
        """u0_hat(xi) = sum_m eps^(-d beta) f_hat_m(eps^-beta (xi - k_m))."""
        xi = np.asarray(xi, dtype=float)
        if self.d == 1 and (xi.ndim == 0 or xi.shape[-1] != 1):
            xi = xi[..., np.newaxis]
        s = self.epsilon ** (-self.beta)
        out = np.zeros(xi.shape[:-1], dtype=complex)
        for comp in self.components:
            out = out + s**self.d * comp.envelope.ft(s * (xi - comp.kvec))
        return out

    def tv_bound(self) -> float:
        """sum_m (2 pi)^-d int |f_hat_m|, independent of eps by construction."""
        return sum(c.envelope.ft_l1() for c in self.components)

    def envelope_intensity(self, r) -> np.ndarray:
        """sum_m |f_m(r)|^2 (initial data of the limiting mean intensity)."""
        out = 0.0
        for comp in self.components:
            out = out + np.abs(comp.envelope(r)) ** 2
        return out


def eval_beam(spec: BeamSpec, grid: TransverseGrid, scaling: RegimeScaling,
              frame: str = RAW, r=None) -> np.ndarray:
    """Sample the incident beam on a grid in the raw or rescaled frame.

    raw frame:       u0(x_j)
    rescaled frame:  u0(eps^-beta r + eta x_j), the process observed around
                     the macroscopic offset r at microscopic resolution.

    Raises ResolutionError when the fastest carrier oscillation is not
    resolved by the grid spacing.
    """
    if spec.d != grid.d:
        raise ConfigurationError("beam and grid dimensions differ")
    kmax = spec.kmax()
    rate = kmax if frame == RAW else scaling.eta * kmax
    if rate >= math.pi / grid.dx:
        raise ResolutionError(
            f"carrier oscillation rate {rate:.4g} exceeds the grid Nyquist rate "
            f"{math.pi / grid.dx:.4g}"
        )
    mesh = grid.x_mesh()
    x = np.stack(mesh, axis=-1)
    if frame == RAW:
        return spec.sample_raw(x)
    if frame == RESCALED:
        if r is None:
            r = np.zeros(spec.d)
        r = np.atleast_1d(np.asarray(r, dtype=float))
        offset = r * spec.epsilon ** (-spec.beta)
        return spec.sample_raw(offset + scaling.eta * x)
    raise ConfigurationError(f"unknown beam frame {frame!r}")
