import math

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
from specklesim.errors import ConfigurationError, ModelError, ResolutionError
from specklesim.moments import (
    DiffusionField,
    MomentQuery,
    free_space_field,
    green_G,
    kinetic_pair_limit_profile,
    m11_limit_diffusive,
    m11_limit_diffusive_profile,
    m11_limit_kinetic,
    mean_field,
    second_moment,
    solve_I2,
)

ZERO_MODEL = CovarianceModel("gaussian", sigma2=0.0, ell=1.0, d=1)


class TestMeanField:
    def test_initial_condition(self, wide_beam, gaussian_model, kinetic_scaling):
        r, x = np.array([0.3]), np.array([0.5])
        got = mean_field(wide_beam, gaussian_model, kinetic_scaling, 0.0, r, x)
        point = r / wide_beam.epsilon**wide_beam.beta + kinetic_scaling.eta * x
        assert got == pytest.approx(complex(wide_beam.sample_raw(point)))

    def test_zero_dispersion_limit(self, gaussian_model):
        # k0=1, R(0)=1, eta=1, z=2, eps^(2 beta - 1) -> 0: e^{-1/4} f(r)
        eps = 1e-6
        scaling = RegimeScaling("kinetic", eps, 2.0, 1.0)
        env = GaussianEnvelope(1.0, 1.0, [0.0])
        beam = BeamSpec((BeamComponent(env, [0.0]),), 2.0, eps)
        r = np.array([0.4])
        got = mean_field(beam, gaussian_model, scaling, 2.0, r, np.zeros(1))
        assert got == pytest.approx(0.7788007830714049 * complex(env(r)), rel=1e-6)

    def test_diffusive_eta_sweep_decays(self, wide_beam, gaussian_model):
        vals = []
        for eta in (1.0, 0.5, 0.33, 0.2):
            scaling = RegimeScaling("diffusive", 0.5, 1.0, 1.0, eta_override=eta)
            vals.append(abs(mean_field(wide_beam, gaussian_model, scaling, 2.0,
                                       np.zeros(1), np.zeros(1))))
        assert all(a > b for a, b in zip(vals, vals[1:]))
        # decay dominated by exp(-k0^2 R(0) z / (8 eta^2)): eta = 0.2 sits
        # within a factor ~2 of e^{-6} relative to eta = 1
        assert 1e-4 < vals[-1] / vals[0] < 1e-2

    def test_carrier_component(self, two_wave_beam, gaussian_model, kinetic_scaling):
        # free-space propagation of a plane-wave component keeps |u| profile
        # drifting at the group shift z eta eps^{beta-1} k / k0
        z = 0.5
        pts = np.linspace(-3, 3, 7)[:, None]
        vals = free_space_field(two_wave_beam, kinetic_scaling, z, pts)
        assert np.all(np.isfinite(vals))


class TestSecondMoment:
    def test_initial_identity(self, wide_beam, gaussian_model, kinetic_scaling):
        q = MomentQuery(0.0, [0.3], [0.5], [0.5])
        got = second_moment(wide_beam, gaussian_model, kinetic_scaling, q)
        point = np.array([0.3]) / wide_beam.epsilon + kinetic_scaling.eta * np.array([0.5])
        expect = abs(complex(wide_beam.sample_raw(point))) ** 2
        assert got.real == pytest.approx(expect, rel=1e-10)
        assert abs(got.imag) < 1e-12

    def test_initial_identity_two_waves(self, two_wave_beam, gaussian_model, kinetic_scaling):
        q = MomentQuery(0.0, [0.1], [0.4], [-0.6])
        got = second_moment(two_wave_beam, gaussian_model, kinetic_scaling, q)
        eps, eta = two_wave_beam.epsilon, kinetic_scaling.eta
        ux = complex(two_wave_beam.sample_raw(np.array([0.1]) / eps + eta * np.array([0.4])))
        uy = complex(two_wave_beam.sample_raw(np.array([0.1]) / eps + eta * np.array([-0.6])))
        assert got == pytest.approx(ux * np.conj(uy), rel=1e-9)

    def test_zero_noise_factorizes(self, wide_beam, kinetic_scaling):
        q = MomentQuery(1.0, [0.2], [0.4], [-0.3])
        got = second_moment(wide_beam, ZERO_MODEL, kinetic_scaling, q)
        a = mean_field(wide_beam, ZERO_MODEL, kinetic_scaling, 1.0, [0.2], [0.4])
        b = mean_field(wide_beam, ZERO_MODEL, kinetic_scaling, 1.0, [0.2], [-0.3])
        assert got == pytest.approx(a * np.conj(b), rel=1e-12)

    def test_hermiticity(self, wide_beam, gaussian_model, kinetic_scaling):
        qxy = MomentQuery(1.2, [0.1], [0.7], [-0.2])
        qyx = MomentQuery(1.2, [0.1], [-0.2], [0.7])
        a = second_moment(wide_beam, gaussian_model, kinetic_scaling, qxy)
        b = second_moment(wide_beam, gaussian_model, kinetic_scaling, qyx)
        assert a == pytest.approx(np.conj(b), rel=1e-12)

    def test_cauchy_schwarz(self, wide_beam, gaussian_model, kinetic_scaling):
        z, r = 1.0, [0.2]
        for x, y in [(0.5, -0.5), (0.0, 1.5), (1.0, 2.0)]:
            mxy = second_moment(wide_beam, gaussian_model, kinetic_scaling,
                                MomentQuery(z, r, [x], [y]))
            mxx = second_moment(wide_beam, gaussian_model, kinetic_scaling,
                                MomentQuery(z, r, [x], [x]))
            myy = second_moment(wide_beam, gaussian_model, kinetic_scaling,
                                MomentQuery(z, r, [y], [y]))
            assert abs(mxy) <= math.sqrt(mxx.real * myy.real) * (1 + 1e-10)


class TestKineticLimits:
    def test_beta_gt1_closed_form(self, gaussian_model):
        # k0=1, z=2, Q(1) = e^{-1/2} - 1: |f(r)|^2 exp(0.5 (e^{-1/2}-1))
        scaling = RegimeScaling("kinetic", 1e-3, 2.0, 1.0)
        env = GaussianEnvelope(1.0, 1.0, [0.0])
        beam = BeamSpec((BeamComponent(env, [0.0]),), 2.0, 1e-3)
        q = MomentQuery(2.0, [0.0], [0.0], [1.0])
        got = m11_limit_kinetic(beam, gaussian_model, scaling, q, centered=False)
        assert got == pytest.approx(0.8214085486138427, rel=1e-12)

    def test_beta_gt1_coincidence(self, gaussian_model):
        scaling = RegimeScaling("kinetic", 1e-3, 2.0, 1.0)
        env = GaussianEnvelope(1.0, 1.0, [0.3])
        beam = BeamSpec((BeamComponent(env, [0.0]),), 2.0, 1e-3)
        q = MomentQuery(2.0, [0.4], [0.7], [0.7])
        got = m11_limit_kinetic(beam, gaussian_model, scaling, q, centered=False)
        assert got == pytest.approx(abs(complex(env([0.4]))) ** 2)

    def test_finite_eps_converges_to_limit(self, gaussian_model):
        env = GaussianEnvelope(1.0, 1.0, [0.0])
        q = MomentQuery(2.0, [0.2], [0.0], [1.0])
        gaps = []
        for eps in (1e-2, 1e-3):
            scaling = RegimeScaling("kinetic", eps, 2.0, 1.0)
            beam = BeamSpec((BeamComponent(env, [0.0]),), 2.0, eps)
            lim = m11_limit_kinetic(beam, gaussian_model, scaling, q, centered=False)
            fin = second_moment(beam, gaussian_model, scaling, q)
            gaps.append(abs(fin - lim) / abs(lim))
        assert gaps[1] < gaps[0]
        assert gaps[1] < 1e-2

    def test_beta1_limit_vs_finite_eps(self, gaussian_model):
        eps = 1e-3
        scaling = RegimeScaling("kinetic", eps, 1.0, 1.0)
        env = GaussianEnvelope(1.0, 1.0, [0.0])
        beam = BeamSpec((BeamComponent(env, [0.0]),), 1.0, eps)
        grid = TransverseGrid(1, 512, 30.0)
        q = MomentQuery(1.0, [0.25], [0.0], [0.8])
        lim = m11_limit_kinetic(beam, gaussian_model, scaling, q, grid=grid, centered=False)
        fin = second_moment(beam, gaussian_model, scaling, q)
        assert abs(fin - lim) / abs(lim) < 2e-2

    def test_cross_pair_vanishes(self, two_wave_beam, gaussian_model, kinetic_scaling):
        grid = TransverseGrid(1, 128, 20.0)
        prof = kinetic_pair_limit_profile(two_wave_beam, gaussian_model, kinetic_scaling,
                                          1.0, np.array([0.5]), 0, 1, grid)
        assert np.all(prof == 0.0)

    def test_plane_wave_centered_limit(self, two_wave_beam, gaussian_model, kinetic_scaling):
        # beta=1 superposition: sum of per-component modulated convolutions
        grid = TransverseGrid(1, 512, 60.0)
        q = MomentQuery(1.0, [0.1], [0.0], [0.4])
        got = m11_limit_kinetic(two_wave_beam, gaussian_model, kinetic_scaling, q, grid=grid)
        total = 0.0 + 0.0j
        from specklesim.moments import _interp_on_grid

        for m in range(2):
            prof = kinetic_pair_limit_profile(two_wave_beam, gaussian_model, kinetic_scaling,
                                              1.0, q.tau, m, m, grid)
            total += _interp_on_grid(grid, prof, q.r)
        assert got == pytest.approx(total, rel=1e-12)


class TestGreenFunction:
    def test_standard_normal_value(self):
        got = green_G(np.array([[-1.0]]), 12.0, [0.0])
        assert got == pytest.approx(1.0 / math.sqrt(2 * math.pi), rel=1e-14)

    def test_normalization(self):
        r = np.linspace(-12, 12, 4001)
        vals = np.array([green_G(np.array([[-0.5]]), 3.0, [x]) for x in r])
        assert np.trapezoid(vals, r) == pytest.approx(1.0, abs=1e-10)

    def test_pde_residual(self):
        # finite-difference oracle: d_t G + (1/24) Gamma G'' = 0
        gamma = np.array([[-2.0]])
        t, ht, hx = 4.0, 1e-4, 1e-3
        for x in (0.0, 0.7, 1.5):
            gt = (green_G(gamma, t + ht, [x]) - green_G(gamma, t - ht, [x])) / (2 * ht)
            gxx = (green_G(gamma, t, [x + hx]) - 2 * green_G(gamma, t, [x])
                   + green_G(gamma, t, [x - hx])) / hx**2
            resid = gt + gamma[0, 0] / 24.0 * gxx
            assert abs(resid) < 1e-6

    def test_domain_errors(self):
        with pytest.raises(ConfigurationError):
            green_G(np.array([[-1.0]]), 0.0, [0.0])
        with pytest.raises(ModelError):
            green_G(np.array([[1.0]]), 1.0, [0.0])


@pytest.fixture
def diffusive_setup(gaussian_model):
    scaling = RegimeScaling("diffusive", 0.01, 1.0, 1.0)
    env = GaussianEnvelope(1.0, 1.5, [0.0])
    beam = BeamSpec((BeamComponent(env, [0.0]),), 1.0, 0.01)
    grid = TransverseGrid(1, 512, 60.0)
    return gaussian_model, scaling, beam, grid


class TestDiffusiveLimits:
    def test_beta_gt1_closed_form(self, gaussian_model):
        # d=1, k0=1, z=2, Gamma=-1, |y-x|=2: decay e^{-1}
        scaling = RegimeScaling("diffusive", 0.01, 2.0, 1.0)
        env = GaussianEnvelope(1.0, 1.0, [0.0])
        beam = BeamSpec((BeamComponent(env, [0.0]),), 2.0, 0.01)
        q = MomentQuery(2.0, [0.3], [0.0], [2.0])
        got = m11_limit_diffusive(beam, gaussian_model, scaling, q)
        expect = abs(complex(env([0.3]))) ** 2 * math.exp(-1.0)
        assert got == pytest.approx(expect, rel=1e-12)

    def test_z0_recovers_intensity(self, diffusive_setup):
        model, scaling, beam, grid = diffusive_setup
        r = grid.x_axis[260]  # on-grid query point: no interpolation error
        q = MomentQuery(0.0, [r], [0.2], [0.2])
        got = m11_limit_diffusive(beam, model, scaling, q, grid=grid)
        assert got == pytest.approx(complex(beam.envelope_intensity(np.array([r]))), rel=1e-9)

    def test_small_z_heat_delta_limit(self, diffusive_setup):
        model, scaling, beam, grid = diffusive_setup
        r = grid.x_axis[262]
        q0 = MomentQuery(0.0, [r], [0.1], [0.1])
        qs = MomentQuery(0.05, [r], [0.1], [0.1])
        a = m11_limit_diffusive(beam, model, scaling, q0, grid=grid)
        b = m11_limit_diffusive(beam, model, scaling, qs, grid=grid)
        assert b == pytest.approx(a, rel=1e-4)

    def test_x_equals_y_matches_solver(self, diffusive_setup):
        model, scaling, beam, grid = diffusive_setup
        z = 2.0
        field = solve_I2(beam, model, [z], grid)
        prof = m11_limit_diffusive_profile(beam, model, scaling, z, np.zeros(1), grid)
        assert np.max(np.abs(field.values[0] - prof.real)) < 1e-10

    def test_correlation_decays_along_rays(self, diffusive_setup):
        model, scaling, beam, grid = diffusive_setup
        z, r = 1.5, [0.0]
        vals = []
        for sep in (0.0, 0.5, 1.0, 2.0):
            q = MomentQuery(z, r, [-sep / 2], [sep / 2])
            vals.append(abs(m11_limit_diffusive(beam, model, scaling, q, grid=grid)))
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_resolution_refusal(self, diffusive_setup):
        model, scaling, beam, _ = diffusive_setup
        coarse = TransverseGrid(1, 32, 60.0)
        q = MomentQuery(0.05, [0.0], [0.0], [2.0])  # phase rate 3k0 tau/2z = 60
        with pytest.raises(ResolutionError):
            m11_limit_diffusive(beam, model, scaling, q, grid=coarse)

    def test_phase_off_variant(self, diffusive_setup):
        model, scaling, beam, grid = diffusive_setup
        q = MomentQuery(1.0, [0.3], [0.0], [0.6])
        on = m11_limit_diffusive(beam, model, scaling, q, grid=grid, include_phase=True)
        off = m11_limit_diffusive(beam, model, scaling, q, grid=grid, include_phase=False)
        assert on != off
        assert abs(on) <= abs(off) * (1 + 1e-9)


class TestSolveI2:
    def test_mass_conserved(self, diffusive_setup):
        model, _, beam, grid = diffusive_setup
        field = solve_I2(beam, model, [0.0, 0.5, 1.0, 2.0], grid)
        mass = field.mass()
        assert np.max(np.abs(mass / mass[0] - 1.0)) < 1e-12

    def test_variance_growth(self, diffusive_setup):
        model, _, beam, grid = diffusive_setup
        zs = [0.0, 1.0, 2.0]
        field = solve_I2(beam, model, zs, grid)
        var = field.axis_variance()
        gamma = model.hessian_at_zero()[0, 0]
        for i, z in enumerate(zs):
            expect = var[0] + (-gamma / 12.0) * z**3
            assert var[i] == pytest.approx(expect, rel=1e-8)

    def test_nonnegative(self, diffusive_setup):
        model, _, beam, grid = diffusive_setup
        field = solve_I2(beam, model, [0.0, 1.0, 2.0], grid)
        assert field.values.min() > -1e-12 * field.values.max()

    def test_superposition_initial_data(self, two_wave_beam, gaussian_model):
        grid = TransverseGrid(1, 256, 40.0)
        field = solve_I2(two_wave_beam, gaussian_model, [0.0], grid)
        expect = two_wave_beam.envelope_intensity(grid.x_axis[:, None])
        assert np.allclose(field.values[0], expect)

    def test_gamma_must_be_negative_definite(self, two_wave_beam):
        grid = TransverseGrid(1, 64, 20.0)
        nodes = np.linspace(0.0, 4.0, 33)
        vals = np.where(nodes < 2.0, -1.0, 1.0)  # invalid spectrum
        bad = CovarianceModel("tabulated-spectrum", d=1,
                              spectrum_nodes=nodes, spectrum_values=vals)
        with pytest.raises(ModelError):
            solve_I2(two_wave_beam, bad, [1.0], grid)
