"""Closed-form and quadrature evaluation of first and second moments.

The mean field obeys a damped free-space equation and is exact in closed
form for gaussian envelopes.  The mutual coherence function m_11 is an
oscillatory double integral over dual variables weighted by the coherence
kernel; for gaussian envelopes it is evaluated by tensor-product
Gauss-Hermite quadrature with node doubling, exactly in epsilon.  The
kinetic and diffusive limit formulas, the parabolic Green's function of the
limiting intensity diffusion, and the spectral heat solver for the mean
intensity complete the set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core.beams import BeamSpec
from .core.covariance import CovarianceModel, q_exponent
from .core.grids import TransverseGrid, grid_ft, grid_ift
from .core.regimes import DIFFUSIVE, KINETIC, RegimeScaling
from .errors import ConfigurationError, ModelError, NumericError, ResolutionError

#: Relative node-doubling stopping tolerance of the m_11 quadrature.
SECOND_MOMENT_RTOL = 1e-8


@dataclass(frozen=True)
class MomentQuery:
    """Arguments of m_11(z, r, x, y): macroscopic offset r, microscopic x, y."""

    z: float
    r: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.z < 0:
            raise ConfigurationError("moment queries need z >= 0")
        for name in ("r", "x", "y"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))

    @property
    def tau(self) -> np.ndarray:
        return self.y - self.x


# -- first moment ------------------------------------------------------------


def free_space_field(beam: BeamSpec, scaling: RegimeScaling, z: float, points) -> np.ndarray:
    """Free-space propagated beam at raw points of shape (..., d).

    Each component propagates in closed form: the envelope acquires the
    complex width s = w^2/2 + i D with dispersion D = z eta eps^(2 beta - 1)
    / (2 k0) and drifts by z eta eps^(beta-1) k/k0, under the carrier phase
    exp(i k.x) exp(-i z eta |k|^2 / (2 k0 eps)).
    """
    pts = np.asarray(points, dtype=float)
    if beam.d == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
        pts = pts[..., np.newaxis]
    eps, beta, eta, k0 = beam.epsilon, beam.beta, scaling.eta, scaling.k0
    disp = z * eta * eps ** (2.0 * beta - 1.0) / (2.0 * k0)
    out = np.zeros(pts.shape[:-1], dtype=complex)
    for comp in beam.components:
        env = comp.envelope
        s = env.width**2 / 2.0 + 1j * disp
        y = eps**beta * pts - (z * eta * eps ** (beta - 1.0) / k0) * comp.kvec
        dist2 = np.sum((y - env.center) ** 2, axis=-1)
        carrier = np.sum(pts * comp.kvec, axis=-1)
        kin = z * eta * float(np.dot(comp.kvec, comp.kvec)) / (2.0 * k0 * eps)
        out = out + (
            env.amplitude
            * (env.width**2 / (2.0 * s)) ** (beam.d / 2.0)
            * np.exp(-dist2 / (4.0 * s))
            * np.exp(1j * carrier)
            * np.exp(-1j * kin)
        )
    return out


def mean_field(beam: BeamSpec, model: CovarianceModel, scaling: RegimeScaling,
               z: float, r, x) -> complex:
    """m_10(z, r, x): damped free-space propagation observed at eps^-beta r + eta x."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    point = r * beam.epsilon ** (-beam.beta) + scaling.eta * x
    damp = math.exp(-scaling.damping_rate(model.r0) * z)
    return complex(damp * free_space_field(beam, scaling, z, point))


# -- finite-epsilon second moment -------------------------------------------


@lru_cache(maxsize=16)
def _hermgauss(n: int):
    return np.polynomial.hermite.hermgauss(n)


def _gh_nodes(n: int, d: int):
    """Tensorized Gauss-Hermite nodes (m, d) and weights (m,) for exp(-|t|^2)."""
    t, u = _hermgauss(n)
    if d == 1:
        return t[:, np.newaxis], u
    tt = np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1).reshape(-1, 2)
    uu = np.outer(u, u).reshape(-1)
    return tt, uu


def _pair_term(beam, model, scaling, query, idx_m, idx_n, n_nodes):
    """Gauss-Hermite evaluation of the (m, n) component pair of m_11."""
    eps, beta, eta, k0 = beam.epsilon, beam.beta, scaling.eta, scaling.k0
    z, r, x, y = query.z, query.r, query.x, query.y
    d = beam.d
    cm, cn = beam.components[idx_m], beam.components[idx_n]
    em, en = cm.envelope, cn.envelope

    t, u = _gh_nodes(n_nodes, d)
    xi = math.sqrt(2.0) * t / em.width        # (m, d)
    ze = math.sqrt(2.0) * t / en.width

    pref_m = em.amplitude * (2.0 * math.pi * em.width**2) ** (d / 2.0) * (math.sqrt(2.0) / em.width) ** d
    pref_n = np.conj(en.amplitude) * (2.0 * math.pi * en.width**2) ** (d / 2.0) * (math.sqrt(2.0) / en.width) ** d

    # phases separable in xi and zeta
    a_m = r + eps**beta * eta * x - em.center - (z * eta * eps ** (beta - 1.0) / k0) * cm.kvec
    a_n = r + eps**beta * eta * y - en.center - (z * eta * eps ** (beta - 1.0) / k0) * cn.kvec
    disp = z * eta * eps ** (2.0 * beta - 1.0) / (2.0 * k0)
    fac_xi = u * np.exp(1j * (xi @ a_m) - 1j * disp * np.sum(xi**2, axis=-1))
    fac_ze = u * np.exp(-1j * (ze @ a_n) + 1j * disp * np.sum(ze**2, axis=-1))

    # coherence kernel coupling xi and zeta
    tau = eta * query.tau
    alpha = (eta * eps ** (beta - 1.0)) * (xi[:, np.newaxis, :] - ze[np.newaxis, :, :]) \
        + (eta / eps) * (cm.kvec - cn.kvec)
    expo = q_exponent(model, tau, alpha, z, scaling)
    kernel = np.exp(expo)

    total = fac_xi @ kernel @ fac_ze

    carrier = (
        np.dot(cm.kvec, eps ** (-beta) * r + eta * x)
        - np.dot(cn.kvec, eps ** (-beta) * r + eta * y)
        - (z * eta / (2.0 * k0 * eps)) * (np.dot(cm.kvec, cm.kvec) - np.dot(cn.kvec, cn.kvec))
    )
    return pref_m * pref_n * np.exp(1j * carrier) * total / (2.0 * math.pi) ** (2 * d)


def second_moment(beam: BeamSpec, model: CovarianceModel, scaling: RegimeScaling,
                  query: MomentQuery, rtol: float = SECOND_MOMENT_RTOL,
                  start_nodes: int = 32, max_nodes: int = 1024) -> complex:
    """m_11(z, r, x, y) by the dual double integral, exact in epsilon.

    Node counts double until the result changes by less than ``rtol``
    relative (with an absolute floor tied to the beam amplitude scale).
    """
    if beam.d == 2 and max_nodes > 96:
        max_nodes = 96  # tensor nodes grow as n^4 in d=2
    scale0 = beam.tv_bound() ** 2
    prev = None
    n = start_nodes
    while n <= max_nodes:
        total = 0.0 + 0.0j
        for im in range(len(beam.components)):
            for jn in range(len(beam.components)):
                total += _pair_term(beam, model, scaling, query, im, jn, n)
        if prev is not None:
            if abs(total - prev) <= rtol * max(abs(total), 1e-8 * scale0):
                return complex(total)
        prev = total
        n *= 2
    raise NumericError(
        f"second_moment quadrature did not converge by {max_nodes} nodes per axis "
        f"(last change {abs(total - prev):.3e} at query z={query.z})"
    )


# -- kinetic limits -----------------------------------------------------------


def _require_profile_grid(grid: TransverseGrid | None, d: int) -> TransverseGrid:
    if grid is None:
        raise ConfigurationError("the beta = 1 limit evaluators need an r-grid")
    if grid.d != d:
        raise ConfigurationError("limit evaluator grid dimension mismatch")
    return grid


def _interp_on_grid(grid: TransverseGrid, profile: np.ndarray, point: np.ndarray):
    if grid.d == 1:
        re = np.interp(point[0], grid.x_axis, profile.real)
        im = np.interp(point[0], grid.x_axis, profile.imag)
        return re + 1j * im
    from scipy.interpolate import RegularGridInterpolator

    itp = RegularGridInterpolator((grid.x_axis, grid.x_axis), profile, method="linear")
    return complex(itp(point[np.newaxis, :])[0])


def kinetic_pair_limit_profile(beam: BeamSpec, model: CovarianceModel,
                               scaling: RegimeScaling, z: float, tau: np.ndarray,
                               idx_m: int, idx_n: int,
                               grid: TransverseGrid | None = None) -> np.ndarray:
    """Centered kinetic-limit contribution of the (m, n) component pair on the r-grid.

    Cross pairs (m != n) vanish in the limit: the kernel argument diverges
    like (k_m - k_n)/eps and the centered kernel difference tends to zero.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    grid = _require_profile_grid(grid, beam.d)
    shape = grid.shape
    if idx_m != idx_n:
        return np.zeros(shape, dtype=complex)
    comp = beam.components[idx_m]
    c_inf = math.exp(-scaling.k0**2 * z * model.r0 / 4.0)
    phase = np.exp(-1j * float(np.dot(comp.kvec, tau)))
    h = np.abs(comp.envelope(np.stack(grid.x_mesh(), axis=-1))) ** 2
    if beam.beta > 1.0:
        factor = math.exp(float(q_exponent(model, tau, np.zeros(beam.d), z, scaling))) - c_inf
        return phase * factor * h.astype(complex)
    xi = np.stack(grid.xi_mesh(), axis=-1)
    kernel = np.exp(q_exponent(model, tau, xi, z, scaling)) - c_inf
    conv = grid_ift(grid, grid_ft(grid, h) * kernel)
    # plane-wave drift: the m-th term is read off at r - k_m z / k0
    if np.any(comp.kvec != 0.0):
        shift = comp.kvec * z / scaling.k0
        pts = np.stack(grid.x_mesh(), axis=-1) - shift
        if grid.d == 1:
            re = np.interp(pts[..., 0], grid.x_axis, conv.real, left=0.0, right=0.0)
            im = np.interp(pts[..., 0], grid.x_axis, conv.imag, left=0.0, right=0.0)
            conv = re + 1j * im
        else:
            from scipy.interpolate import RegularGridInterpolator

            itp = RegularGridInterpolator((grid.x_axis, grid.x_axis), conv,
                                          method="linear", bounds_error=False, fill_value=0.0)
            conv = itp(pts.reshape(-1, 2)).reshape(shape)
    return phase * conv


def m11_limit_kinetic(beam: BeamSpec, model: CovarianceModel, scaling: RegimeScaling,
                      query: MomentQuery, grid: TransverseGrid | None = None,
                      centered: bool | None = None) -> complex:
    """Kinetic-regime limit of the second moment at a query point.

    Wide-envelope beams (single component, zero carrier) admit a full-moment
    limit; plane-wave superpositions only admit the centered limit, which is
    what this returns for them (``centered`` can force either convention
    where both exist).
    """
    if scaling.regime != KINETIC:
        raise ConfigurationError("kinetic limit evaluator requires the kinetic regime")
    z, r, tau = query.z, query.r, query.tau
    if centered is None:
        centered = beam.is_plane_wave_superposition
    if centered:
        if beam.beta > 1.0:
            c_inf = math.exp(-scaling.k0**2 * z * model.r0 / 4.0)
            total = 0.0 + 0.0j
            for comp in beam.components:
                factor = math.exp(float(q_exponent(model, tau, np.zeros(beam.d), z, scaling))) - c_inf
                total += (
                    np.abs(comp.envelope(r)) ** 2
                    * np.exp(-1j * float(np.dot(comp.kvec, tau)))
                    * factor
                )
            return complex(total)
        grid = _require_profile_grid(grid, beam.d)
        total = np.zeros(grid.shape, dtype=complex)
        for m in range(len(beam.components)):
            total = total + kinetic_pair_limit_profile(beam, model, scaling, z, tau, m, m, grid)
        return _interp_on_grid(grid, total, r)
    if beam.is_plane_wave_superposition:
        raise ConfigurationError(
            "the full (uncentered) kinetic limit only exists for wide-envelope beams"
        )
    comp = beam.components[0]
    if beam.beta > 1.0:
        factor = math.exp(float(q_exponent(model, tau, np.zeros(beam.d), z, scaling)))
        return complex(np.abs(comp.envelope(r)) ** 2 * factor)
    grid = _require_profile_grid(grid, beam.d)
    h = np.abs(comp.envelope(np.stack(grid.x_mesh(), axis=-1))) ** 2
    xi = np.stack(grid.xi_mesh(), axis=-1)
    kernel = np.exp(q_exponent(model, tau, xi, z, scaling))
    conv = grid_ift(grid, grid_ft(grid, h) * kernel)
    return _interp_on_grid(grid, conv, r)


# -- diffusive limits ---------------------------------------------------------


def green_G(gamma: np.ndarray, t: float, r) -> float:
    """Gaussian kernel of d/dt G + (1/24) div(Gamma grad G) = 0 from a point mass.

    The covariance is Sigma(t) = (-Gamma) t / 12 (matching d/dt G =
    div(D grad G) with D = -Gamma/24 and Sigma = 2 D t); re-verified
    against a finite-difference residual in the tests rather than trusted.
    """
    gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
    if t <= 0:
        raise ConfigurationError("green_G requires t > 0 (the t -> 0 limit is a point mass)")
    eig = np.linalg.eigvalsh(gamma)
    if np.any(eig >= 0):
        raise ModelError("green_G requires a negative definite Gamma")
    d = gamma.shape[0]
    sigma = -gamma * t / 12.0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    quad = r @ np.linalg.solve(sigma, r)
    det = np.linalg.det(sigma)
    return float(np.exp(-quad / 2.0) / math.sqrt((2.0 * math.pi) ** d * det))


def heat_evolve(values: np.ndarray, grid: TransverseGrid, gamma: np.ndarray, t: float) -> np.ndarray:
    """Spectral propagation of d/dt I + (1/24) div(Gamma grad I) = 0 on the grid.

    Exact in the discrete setting: each FFT mode is multiplied by
    exp(t xi^T Gamma xi / 24).  Real input yields real output.
    """
    gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
    axes = tuple(range(-grid.d, 0))
    mesh = grid.xi_mesh()
    quad = np.zeros(grid.shape)
    for i in range(grid.d):
        for j in range(grid.d):
            quad = quad + mesh[i] * gamma[i, j] * mesh[j]
    mult = np.exp(t * quad / 24.0)
    out = np.fft.ifftn(np.fft.fftn(values, axes=axes) * mult, axes=axes)
    return out if np.iscomplexobj(values) else out.real


def m11_limit_diffusive_profile(beam: BeamSpec, model: CovarianceModel,
                                scaling: RegimeScaling, z: float, tau: np.ndarray,
                                grid: TransverseGrid, include_phase: bool = True) -> np.ndarray:
    """Diffusive beta = 1 limit on the r-grid for a fixed separation tau.

    Value at r: exp(k0^2 z tau^T Gamma tau / 32) * exp(-i phi0.r) *
    (G(z^3) * [exp(i phi0.r') |f|^2])(r) with phi0 = 3 k0 tau / (2 z).
    ``include_phase=False`` drops both oscillatory factors (reported side by
    side because no quantitative smallness threshold for the phase exists).
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    gamma = model.hessian_at_zero()
    eig = np.linalg.eigvalsh(gamma)
    if np.any(eig >= 0):
        raise ModelError("diffusive limit requires a negative definite Gamma")
    h0 = beam.envelope_intensity(np.stack(grid.x_mesh(), axis=-1)).astype(complex)
    if z == 0.0:
        return h0
    k0 = scaling.k0
    decay = math.exp(k0**2 * z * float(tau @ gamma @ tau) / 32.0)
    if not include_phase or not np.any(tau != 0.0):
        out = heat_evolve(h0.real, grid, gamma, z**3).astype(complex)
        return decay * out
    phi0 = 3.0 * k0 * tau / (2.0 * z)
    if np.linalg.norm(phi0) >= math.pi / grid.dx:
        raise ResolutionError(
            f"oscillatory factor rate {np.linalg.norm(phi0):.4g} exceeds the grid "
            f"Nyquist rate {math.pi / grid.dx:.4g}; refine the r-grid or drop the phase"
        )
    mesh = np.stack(grid.x_mesh(), axis=-1)
    mod = np.exp(1j * np.sum(mesh * phi0, axis=-1))
    conv = heat_evolve(h0 * mod, grid, gamma, z**3)
    return decay * np.conj(mod) * conv


def m11_limit_diffusive(beam: BeamSpec, model: CovarianceModel, scaling: RegimeScaling,
                        query: MomentQuery, grid: TransverseGrid | None = None,
                        include_phase: bool = True) -> complex:
    """Diffusive-regime limit of the second moment at a query point."""
    if scaling.regime != DIFFUSIVE:
        raise ConfigurationError("diffusive limit evaluator requires the diffusive regime")
    z, r, tau = query.z, query.r, query.tau
    gamma = model.hessian_at_zero()
    eig = np.linalg.eigvalsh(gamma)
    if np.any(eig >= 0):
        raise ModelError("diffusive limit requires a negative definite Gamma")
    if beam.beta > 1.0:
        decay = math.exp(scaling.k0**2 * z * float(tau @ gamma @ tau) / 8.0)
        return complex(beam.envelope_intensity(r) * decay)
    grid = _require_profile_grid(grid, beam.d)
    profile = m11_limit_diffusive_profile(beam, model, scaling, z, tau, grid, include_phase)
    return _interp_on_grid(grid, profile, r)


# -- mean intensity diffusion -------------------------------------------------


@dataclass(eq=False)
class DiffusionField:
    """Mean intensity I2 sampled on an r-grid at a list of z values."""

    z_values: tuple[float, ...]
    grid: TransverseGrid
    values: np.ndarray  # (len(z_values), *grid.shape)

    def mass(self) -> np.ndarray:
        axes = tuple(range(-self.grid.d, 0))
        return np.sum(self.values, axis=axes) * self.grid.cell_volume

    def axis_variance(self, axis: int = 0) -> np.ndarray:
        """Second centered spatial moment along one axis at every z."""
        mesh = self.grid.x_mesh()[axis]
        axes = tuple(range(-self.grid.d, 0))
        mass = np.sum(self.values, axis=axes)
        mean = np.sum(self.values * mesh, axis=axes) / mass
        second = np.sum(self.values * mesh**2, axis=axes) / mass
        return second - mean**2


def solve_I2(beam: BeamSpec, model: CovarianceModel, z_values, grid: TransverseGrid) -> DiffusionField:
    """Mean-intensity diffusion: heat evolution in the time variable z^3.

    Initial data is |f|^2 (or the sum over components for superpositions);
    diffusivity -Gamma/24.  Spectral exponentiation is exact on the grid.
    """
    gamma = model.hessian_at_zero()
    eig = np.linalg.eigvalsh(gamma)
    if np.any(eig >= 0):
        raise ModelError("solve_I2 requires a negative definite Gamma")
    i0 = beam.envelope_intensity(np.stack(grid.x_mesh(), axis=-1))
    z_values = tuple(float(z) for z in z_values)
    out = np.empty((len(z_values),) + grid.shape)
    for i, z in enumerate(z_values):
        if z < 0:
            raise ConfigurationError("solve_I2 needs z >= 0")
        out[i] = i0 if z == 0.0 else heat_evolve(i0, grid, gamma, z**3)
    return DiffusionField(z_values, grid, out)
