import numpy as np
import pytest

from specklesim.core import (
    BeamComponent,
    BeamSpec,
    CovarianceModel,
    GaussianEnvelope,
    RegimeScaling,
    TransverseGrid,
)
from specklesim.propagate import EnsembleSpec, EnsembleStats, run_ensemble


@pytest.fixture
def gaussian_model():
    return CovarianceModel("gaussian", sigma2=1.0, ell=1.0, d=1)


@pytest.fixture
def kinetic_scaling():
    return RegimeScaling("kinetic", epsilon=0.5, beta=1.0, k0=1.0)


@pytest.fixture
def diffusive_scaling():
    return RegimeScaling("diffusive", epsilon=0.01, beta=1.0, k0=1.0)


@pytest.fixture
def wide_beam():
    env = GaussianEnvelope(1.0, 1.0, [0.0])
    return BeamSpec((BeamComponent(env, [0.0]),), beta=1.0, epsilon=0.5)


@pytest.fixture
def two_wave_beam():
    e1 = GaussianEnvelope(1.0, 1.0, [0.0])
    e2 = GaussianEnvelope(0.7, 1.5, [0.5])
    return BeamSpec(
        (BeamComponent(e1, [1.0]), BeamComponent(e2, [-2.0])), beta=1.0, epsilon=0.5
    )


@pytest.fixture
def small_grid():
    return TransverseGrid(1, 256, 40.0)


def circular_gaussian_samples(rng, n, cov, mean=None):
    """Synthetic circular complex Gaussian vectors with E[z z^H] = cov."""
    dim = cov.shape[0]
    chol = np.linalg.cholesky(cov)
    z = (rng.normal(size=(n, dim)) + 1j * rng.normal(size=(n, dim))) / np.sqrt(2.0)
    out = z @ chol.T  # z_i = sum_k w_k chol[i, k] so E z z^H = chol chol^H
    if mean is not None:
        out = out + mean
    return out


def synthetic_stats(field_samples):
    """EnsembleStats carrying externally generated probe samples."""
    n, n_probes = field_samples.shape
    grid = TransverseGrid(1, 64, 10.0)
    env = GaussianEnvelope(1.0, 1.0, [0.0])
    beam = BeamSpec((BeamComponent(env, [0.0]),), beta=1.0, epsilon=0.5)
    scaling = RegimeScaling("kinetic", 0.5, 1.0, 1.0)
    model = CovarianceModel("gaussian", 1.0, 1.0, 1)
    spec = EnsembleSpec(beam, model, scaling, grid, 0.0, 1, max(n, 2), 0,
                        probes=tuple((i,) for i in range(n_probes)))
    return EnsembleStats(
        spec,
        np.asarray(field_samples, complex),
        np.ones(n),
        np.zeros(n),
    )


@pytest.fixture
def deterministic_stats(wide_beam, kinetic_scaling, small_grid):
    """Zero-noise ensemble: every realization identical (negative control)."""
    model = CovarianceModel("gaussian", sigma2=0.0, ell=1.0, d=1)
    c = small_grid.n // 2
    spec = EnsembleSpec(wide_beam, model, kinetic_scaling, small_grid,
                        z_final=0.5, n_steps=10, n_realizations=64, seed=5,
                        probes=((c,), (c + 4,), (c + 8,)))
    return run_ensemble(spec)
