"""Lateral covariance models of the random medium.

A model bundles the covariance R(x), its power spectrum R_hat(xi) >= 0, the
centered kernel Q(x) = R(x) - R(0) <= 0 and the Hessian Gamma = Hess R(0).
The reference model is the isotropic gaussian

    R(x) = sigma2 * exp(-|x|^2 / (2 ell^2)),
    R_hat(xi) = sigma2 * (2 pi ell^2)^(d/2) * exp(-ell^2 |xi|^2 / 2),

for which every admissibility property holds in closed form.  A second kind
accepts a user-tabulated radial spectrum; its covariance is obtained by
quadrature of the inverse transform, which limits the validity range in x to
what the table's node spacing can resolve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from ..errors import ModelError, NumericError, OutOfRangeError
from .regimes import RegimeScaling

GAUSSIAN = "gaussian"
TABULATED = "tabulated-spectrum"


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """Medium covariance model.

    Parameters
    ----------
    kind : str
        ``"gaussian"`` or ``"tabulated-spectrum"``.
    sigma2 : float
        Field variance R(0) (gaussian kind only; ignored for tabulated).
    ell : float
        Correlation length (gaussian kind only).
    d : int
        Lateral dimension, 1 or 2.
    spectrum_nodes, spectrum_values : arrays, tabulated kind only
        Radii rho_0 = 0 < rho_1 < ... and samples of R_hat(rho).  Values may
        be invalid (negative); admissibility is the job of
        :func:`validate_hypothesis`, not of the constructor.
    """

    kind: str = GAUSSIAN
    sigma2: float = 1.0
    ell: float = 1.0
    d: int = 1
    spectrum_nodes: np.ndarray | None = field(default=None, repr=False)
    spectrum_values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ModelError(f"only d=1 and d=2 models are supported, got d={self.d}")
        if self.kind == GAUSSIAN:
            if self.sigma2 < 0 or self.ell <= 0:
                raise ModelError("gaussian model needs sigma2 >= 0 and ell > 0")
        elif self.kind == TABULATED:
            nodes = np.asarray(self.spectrum_nodes, dtype=float)
            vals = np.asarray(self.spectrum_values, dtype=float)
            if nodes.ndim != 1 or nodes.shape != vals.shape or nodes.size < 2:
                raise ModelError("tabulated model needs matching 1-d node/value arrays")
            if nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0):
                raise ModelError("spectrum nodes must start at 0 and increase")
            object.__setattr__(self, "spectrum_nodes", nodes)
            object.__setattr__(self, "spectrum_values", vals)
        else:
            raise ModelError(f"unknown covariance kind {self.kind!r}")

    # -- basic evaluations -------------------------------------------------

    @property
    def r0(self) -> float:
        """R(0)."""
        if self.kind == GAUSSIAN:
            return self.sigma2
        return float(self._tabulated_covariance(np.array([0.0]))[0])

    @property
    def x_max(self) -> float:
        """Largest |x| at which the covariance can be evaluated."""
        if self.kind == GAUSSIAN:
            return math.inf
        spacing = float(np.max(np.diff(self.spectrum_nodes)))
        return math.pi / (8.0 * spacing)

    def covariance(self, x) -> np.ndarray:
        """R(x) for points of shape (..., d) (or scalars when d=1)."""
        x = _as_points(x, self.d)
        r = np.linalg.norm(x, axis=-1)
        if self.kind == GAUSSIAN:
            return self.sigma2 * np.exp(-(r**2) / (2.0 * self.ell**2))
        if np.any(r > self.x_max):
            raise OutOfRangeError(
                f"|x| exceeds the tabulated validity range {self.x_max:.4g}"
            )
        return self._tabulated_covariance(r)

    def spectrum(self, xi) -> np.ndarray:
        """R_hat(xi) for wavenumbers of shape (..., d) (or scalars when d=1)."""
        xi = _as_points(xi, self.d)
        rho = np.linalg.norm(xi, axis=-1)
        if self.kind == GAUSSIAN:
            amp = self.sigma2 * (2.0 * math.pi * self.ell**2) ** (self.d / 2.0)
            return amp * np.exp(-(self.ell**2) * rho**2 / 2.0)
        return np.interp(rho, self.spectrum_nodes, self.spectrum_values, right=0.0)

    def centered(self, x) -> np.ndarray:
        """Q(x) = R(x) - R(0)."""
        return self.covariance(x) - self.r0

    def hessian_at_zero(self) -> np.ndarray:
        """Gamma = Hess R(0), a d x d symmetric matrix."""
        if self.kind == GAUSSIAN:
            return -(self.sigma2 / self.ell**2) * np.eye(self.d)
        rho = self.spectrum_nodes
        vals = self.spectrum_values
        vmax = float(np.max(np.abs(vals))) if vals.size else 0.0
        if vmax > 0 and abs(vals[-1]) * rho[-1] ** 2 > 1e-8 * vmax:
            raise ModelError(
                "tabulated spectrum does not resolve the curvature at 0 "
                "(second-moment integrand not decayed at the table end)"
            )
        if self.d == 1:
            m2 = np.trapezoid(rho**2 * vals, rho) / math.pi
        else:
            m2 = np.trapezoid(rho**3 * vals, rho) / (4.0 * math.pi)
        return -m2 * np.eye(self.d)

    def _tabulated_covariance(self, r: np.ndarray) -> np.ndarray:
        """Inverse transform of the radial table at radii r (trapezoid rule)."""
        rho = self.spectrum_nodes
        vals = self.spectrum_values
        shape = np.shape(r)
        r = np.atleast_1d(np.asarray(r, dtype=float)).ravel()
        if self.d == 1:
            integrand = vals[np.newaxis, :] * np.cos(np.outer(r, rho))
            out = np.trapezoid(integrand, rho, axis=-1) / math.pi
        else:
            integrand = vals[np.newaxis, :] * special.j0(np.outer(r, rho)) * rho[np.newaxis, :]
            out = np.trapezoid(integrand, rho, axis=-1) / (2.0 * math.pi)
        return out.reshape(shape)


def _as_points(x, d: int) -> np.ndarray:
    """Coerce scalars / bare arrays to point arrays of shape (..., d)."""
    arr = np.asarray(x, dtype=float)
    if d == 1:
        if arr.ndim == 0 or arr.shape[-1] != 1:
            arr = arr[..., np.newaxis]
        return arr
    if arr.shape[-1] != d:
        raise ModelError(f"expected points with last axis {d}, got shape {arr.shape}")
    return arr


# -- module-level operation aliases ----------------------------------------


def eval_covariance(model: CovarianceModel, x):
    """R(x); see :meth:`CovarianceModel.covariance`."""
    return model.covariance(x)


def eval_spectrum(model: CovarianceModel, xi):
    """R_hat(xi); see :meth:`CovarianceModel.spectrum`."""
    return model.spectrum(xi)


def hessian_at_zero(model: CovarianceModel) -> np.ndarray:
    """Gamma = Hess R(0); see :meth:`CovarianceModel.hessian_at_zero`."""
    return model.hessian_at_zero()


# -- coherence kernel -------------------------------------------------------

#: Absolute tolerance on the exponent of the coherence kernel.
Q_KERNEL_EXPONENT_TOL = 1e-10


def q_kernel(model: CovarianceModel, tau, alpha, z: float, scaling: RegimeScaling) -> float:
    """Coherence damping kernel.

    Returns ``exp( k0^2 z / (4 eta^2) * int_0^1 Q(tau + alpha s z / k0) ds )``,
    a value in (0, 1].  The s-integral is evaluated by adaptive quadrature with
    absolute tolerance 1e-10 on the exponent.
    """
    if z < 0:
        raise NumericError(f"q_kernel requires z >= 0, got {z}")
    if z == 0.0:
        return 1.0
    tau = _as_points(tau, model.d)[..., :]
    alpha = _as_points(alpha, model.d)[..., :]
    if tau.ndim != 1 or alpha.ndim != 1:
        raise ModelError("q_kernel takes a single (tau, alpha) pair; "
                         "use q_exponent_gaussian for batched evaluation")
    pref = scaling.k0**2 * z / (4.0 * scaling.eta**2)

    def integrand(s):
        return float(model.centered(tau + alpha * s * z / scaling.k0))

    est, err = integrate.quad(
        integrand, 0.0, 1.0, epsabs=Q_KERNEL_EXPONENT_TOL / max(pref, 1.0), epsrel=1e-12, limit=200
    )
    if err * pref > 10 * Q_KERNEL_EXPONENT_TOL:
        raise NumericError(
            f"q_kernel quadrature did not converge: exponent error {err * pref:.3e} "
            f"(pref={pref:.3e}, tau={tau}, alpha={alpha}, z={z})"
        )
    return float(np.exp(pref * est))


def q_exponent_gaussian(model: CovarianceModel, tau, alpha, z, scaling: RegimeScaling) -> np.ndarray:
    """Closed-form kernel exponent for the gaussian model (vectorized).

    For R gaussian the s-integral of Q(tau + alpha s z / k0) has an
    error-function primitive; this is both a cross-check oracle for
    :func:`q_kernel` and the fast path in quadrature-heavy moment evaluations.
    ``tau`` and ``alpha`` broadcast as point arrays of shape (..., d).
    """
    if model.kind != GAUSSIAN:
        raise ModelError("closed-form kernel exponent only exists for the gaussian kind")
    tau = _as_points(tau, model.d)
    alpha = _as_points(alpha, model.d)
    tau, alpha = np.broadcast_arrays(tau, alpha)
    ell = model.ell
    beta = alpha * (z / scaling.k0)
    b2 = np.sum(beta**2, axis=-1)
    tb = np.sum(tau * beta, axis=-1)
    t2 = np.sum(tau**2, axis=-1)

    small = b2 < (1e-14 * ell) ** 2
    b2_safe = np.where(small, 1.0, b2)
    b = tb / b2_safe
    c = (t2 - tb**2 / b2_safe) / (2.0 * ell**2)
    scale = np.sqrt(b2_safe) / (math.sqrt(2.0) * ell)
    mean_r = (
        model.sigma2
        * np.exp(-c)
        * math.sqrt(math.pi / 2.0)
        * (ell / np.sqrt(b2_safe))
        * (special.erf((1.0 + b) * scale) - special.erf(b * scale))
    )
    mean_r = np.where(small, model.sigma2 * np.exp(-t2 / (2.0 * ell**2)), mean_r)
    pref = scaling.k0**2 * z / (4.0 * scaling.eta**2)
    return pref * (mean_r - model.sigma2)


def q_exponent(model: CovarianceModel, tau, alpha, z, scaling: RegimeScaling,
               n_s: int = 129) -> np.ndarray:
    """Kernel exponent, vectorized over (tau, alpha) point arrays.

    Gaussian models use the closed form; tabulated models use a fixed
    Simpson rule with ``n_s`` nodes in s (refined once to estimate the error).
    """
    if z == 0.0:
        tau_b, alpha_b = np.broadcast_arrays(_as_points(tau, model.d), _as_points(alpha, model.d))
        return np.zeros(tau_b.shape[:-1])
    if model.kind == GAUSSIAN:
        return q_exponent_gaussian(model, tau, alpha, z, scaling)
    tau = _as_points(tau, model.d)
    alpha = _as_points(alpha, model.d)
    tau, alpha = np.broadcast_arrays(tau, alpha)
    pref = scaling.k0**2 * z / (4.0 * scaling.eta**2)

    def simpson_mean(n):
        s = np.linspace(0.0, 1.0, n)
        pts = tau[..., np.newaxis, :] + alpha[..., np.newaxis, :] * (s[:, np.newaxis] * z / scaling.k0)
        qv = model.centered(pts)
        return integrate.simpson(qv, x=s, axis=-1)

    coarse = simpson_mean(n_s)
    fine = simpson_mean(2 * n_s - 1)
    if np.max(np.abs(fine - coarse)) * pref > 1e3 * Q_KERNEL_EXPONENT_TOL:
        raise NumericError("tabulated q_exponent s-rule not converged; refine n_s")
    return pref * fine


# -- hypothesis validation ---------------------------------------------------


@dataclass(frozen=True)
class CheckRecord:
    check: str
    passed: bool
    hard: bool
    detail: str
    value: float = float("nan")


@dataclass(frozen=True)
class HypothesisReport:
    records: tuple[CheckRecord, ...]

    @property
    def passed(self) -> bool:
        """True when every hard check passed (advisory findings do not fail)."""
        return all(r.passed for r in self.records if r.hard)

    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if not r.passed]

    def to_text(self) -> str:
        lines = ["covariance hypothesis report"]
        for r in self.records:
            status = "PASS" if r.passed else ("FAIL" if r.hard else "WARN")
            lines.append(f"  [{status}] {r.check}: {r.detail}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)

    def to_records(self) -> list[dict]:
        return [
            {
                "check": r.check,
                "passed": r.passed,
                "hard": r.hard,
                "value": r.value,
                "detail": r.detail,
            }
            for r in self.records
        ]


def validate_hypothesis(model: CovarianceModel, scaling: RegimeScaling,
                        n_samples: int = 257) -> HypothesisReport:
    """Check the covariance admissibility assumptions numerically.

    Failures are report entries, never exceptions.  Hard checks gate the
    simulation; the radial-majorant integrability check is advisory for
    tabulated spectra (the constructed sup-over-shells majorant may fail
    integrability without settling admissibility of the model itself).
    """
    recs: list[CheckRecord] = []
    d = model.d
    r0 = model.r0
    span = model.ell * 12.0 if model.kind == GAUSSIAN else min(model.x_max, 12.0)
    xs = np.linspace(-span, span, n_samples)
    pts = xs[:, np.newaxis] if d == 1 else np.stack([xs, 0.3 * xs], axis=-1)

    rv = model.covariance(pts)
    rv_neg = model.covariance(-pts)
    sym = float(np.max(np.abs(rv - rv_neg)))
    recs.append(CheckRecord("symmetry", sym <= 1e-12 * max(abs(r0), 1.0), True,
                            f"max |R(x)-R(-x)| = {sym:.3e}", sym))

    tail_r = float(np.max(np.abs(rv[np.abs(xs) > 0.75 * span])))
    bounded_r = np.all(np.isfinite(rv))
    recs.append(CheckRecord(
        "covariance-l1-linf", bool(bounded_r and tail_r <= 1e-4 * max(abs(r0), 1e-300)),
        True, f"sup sampled |R| = {np.max(np.abs(rv)):.3e}, edge |R| = {tail_r:.3e}", tail_r))

    xi_span = 10.0 / model.ell if model.kind == GAUSSIAN else float(model.spectrum_nodes[-1])
    xis = np.linspace(-xi_span, xi_span, n_samples)
    xi_pts = xis[:, np.newaxis] if d == 1 else np.stack([xis, 0.3 * xis], axis=-1)
    sv = model.spectrum(xi_pts)
    min_s = float(np.min(sv))
    recs.append(CheckRecord("spectrum-nonneg", min_s >= -1e-12 * max(np.max(np.abs(sv)), 1e-300),
                            True, f"min sampled R_hat = {min_s:.3e}", min_s))

    qv = model.centered(pts)
    max_q = float(np.max(qv))
    recs.append(CheckRecord("q-nonpositive", max_q <= 1e-12 * max(abs(r0), 1e-300), True,
                            f"max sampled Q = {max_q:.3e}", max_q))

    consistency = _spectrum_mass(model) / r0 - 1.0 if r0 != 0 else 0.0
    recs.append(CheckRecord("fourier-consistency", abs(consistency) <= 1e-6, True,
                            f"(2pi)^-d int R_hat / R(0) - 1 = {consistency:.3e}",
                            float(consistency)))

    maj_ok, maj_detail, maj_val = _radial_majorant_check(model)
    recs.append(CheckRecord("radial-majorant-integrable", maj_ok, model.kind == GAUSSIAN,
                            maj_detail, maj_val))

    line_ok, line_val = _line_integrability_check(model)
    recs.append(CheckRecord("line-integrability", line_ok, True,
                            f"largest direction-integral tail fraction = {line_val:.3e}",
                            line_val))

    recs.append(CheckRecord("high-d-spectrum-decay", True, True,
                            "d <= 2: <xi>^(d-2) R_hat boundedness is vacuous", 0.0))

    if scaling.regime == "diffusive":
        try:
            gamma = model.hessian_at_zero()
            eig = np.linalg.eigvalsh(gamma)
            ok = bool(np.all(eig < 0))
            recs.append(CheckRecord("hessian-negdef", ok, True,
                                    f"eigenvalues of Gamma: {eig}", float(np.max(eig))))
        except ModelError as exc:
            recs.append(CheckRecord("hessian-negdef", False, True, str(exc)))
        try:
            eta = scaling.eta
            recs.append(CheckRecord("regime-eta", 0.0 < eta <= 1.0, True,
                                    f"eta = {eta:.5f}", eta))
        except Exception as exc:
            recs.append(CheckRecord("regime-eta", False, True, str(exc)))
    else:
        recs.append(CheckRecord("regime-eta", True, True, "kinetic regime: eta = 1", 1.0))

    return HypothesisReport(tuple(recs))


def _spectrum_mass(model: CovarianceModel) -> float:
    """(2 pi)^-d int R_hat(xi) dxi by radial quadrature."""
    if model.kind == GAUSSIAN:
        hi = 12.0 / model.ell
    else:
        hi = float(model.spectrum_nodes[-1])
    rho = np.linspace(0.0, hi, 4097)
    prof = model.spectrum(np.stack([rho] + [np.zeros_like(rho)] * (model.d - 1), axis=-1))
    if model.d == 1:
        return float(np.trapezoid(prof, rho) / math.pi)
    return float(np.trapezoid(prof * rho, rho) / (2.0 * math.pi))


def _radial_majorant_check(model: CovarianceModel):
    """Build R_maj(r) = sup_{|xi|=r} R_hat and test its integrability."""
    if model.kind == GAUSSIAN:
        hi = 14.0 / model.ell
    else:
        hi = float(model.spectrum_nodes[-1])
    radii = np.linspace(0.0, hi, 2049)
    if model.d == 1:
        pts = radii[:, np.newaxis]
        maj = np.maximum(model.spectrum(pts), model.spectrum(-pts))
        total = np.trapezoid(maj, radii)
        tail = np.trapezoid(maj[radii > 0.75 * hi], radii[radii > 0.75 * hi])
    else:
        thetas = np.linspace(0.0, math.pi, 33)
        dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=-1)
        vals = model.spectrum(radii[:, np.newaxis, np.newaxis] * dirs[np.newaxis, :, :])
        maj = np.max(vals, axis=-1)
        total = np.trapezoid(maj * radii, radii)
        tail = np.trapezoid((maj * radii)[radii > 0.75 * hi], radii[radii > 0.75 * hi])
    ok = bool(np.isfinite(total) and (total == 0.0 or tail <= 1e-4 * total))
    detail = f"int majorant = {total:.4g}, tail fraction = {tail / total if total else 0.0:.3e}"
    return ok, detail, float(total)


def _line_integrability_check(model: CovarianceModel):
    """s -> R(tau + s e) integrability on sampled directions and offsets."""
    span = model.ell * 12.0 if model.kind == GAUSSIAN else min(model.x_max / 2.5, 12.0)
    # window wide enough that an offset tau = 0.4 span keeps its peak central
    s = np.linspace(-2.0 * span, 2.0 * span, 2049)
    worst = 0.0
    if model.d == 1:
        dirs = [np.array([1.0])]
        taus = [np.array([0.0]), np.array([0.4 * span])]
    else:
        dirs = [np.array([1.0, 0.0]), np.array([math.sqrt(0.5), math.sqrt(0.5)])]
        taus = [np.zeros(2), np.array([0.4 * span, -0.2 * span])]
    for e in dirs:
        for tau in taus:
            pts = tau[np.newaxis, :] + s[:, np.newaxis] * e[np.newaxis, :]
            vals = np.abs(model.covariance(pts))
            total = float(np.trapezoid(vals, s))
            tail = float(np.trapezoid(vals[np.abs(s) > 1.5 * span], s[np.abs(s) > 1.5 * span]))
            if total > 0:
                worst = max(worst, tail / total)
    return worst <= 1e-4, worst
