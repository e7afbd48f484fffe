"""Pairing combinatorics, Gaussian moment functionals and speckle statistics.

The moment functional of a circularly symmetric complex Gaussian vector with
mean h and raw second moments g is a sum over all sets of disjoint
(unconjugated, conjugated) index pairs; the centered functional reduces to a
permanent of the centered second moments and vanishes for unbalanced orders.
Empirical estimation works off the per-realization probe records of
:class:`specklesim.propagate.EnsembleStats`; standard errors come from
jackknife over realizations (for plain moments the jackknife variance of a
sample mean reduces exactly to the usual s^2/n, which is used directly).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .errors import ConfigurationError, SizeError, SpeckleError
from .numutil import stable_mean
from .propagate import EnsembleStats

#: Largest moment order p+q served by the estimators.
MAX_MOMENT_ORDER = 8

#: Largest p, q for pairing enumeration.
MAX_PAIRING_ORDER = 6


class DiagnosticError(SpeckleError):
    """An estimator was asked for a statistically degenerate quantity."""


# -- pairing combinatorics ----------------------------------------------------


@dataclass(frozen=True)
class PairingSet:
    """A set of (j, l) pairs with pairwise distinct j's and distinct l's.

    Indices are 0-based: j indexes the unconjugated factors (0..p-1) and l
    the conjugated ones (0..q-1).
    """

    p: int
    q: int
    pairs: frozenset

    @property
    def m(self) -> int:
        return len(self.pairs)

    @property
    def rows(self) -> frozenset:
        return frozenset(j for j, _ in self.pairs)

    @property
    def cols(self) -> frozenset:
        return frozenset(l for _, l in self.pairs)

    def complement_disjoint(self) -> frozenset:
        """Pairs sharing no index with this set (the fully commuting remainder)."""
        return frozenset(
            (j, l)
            for j in range(self.p)
            for l in range(self.q)
            if j not in self.rows and l not in self.cols
        )

    def complement_shared(self) -> frozenset:
        """Pairs sharing exactly one index with some pair of this set."""
        all_pairs = {(j, l) for j in range(self.p) for l in range(self.q)}
        return frozenset(all_pairs - self.pairs - self.complement_disjoint())


def pairing_count(p: int, q: int) -> int:
    """K = sum_m C(p, m) C(q, m) m!."""
    return sum(
        math.comb(p, m) * math.comb(q, m) * math.factorial(m)
        for m in range(1, min(p, q) + 1)
    )


def enumerate_pairings(p: int, q: int) -> list[PairingSet]:
    """All nonempty disjoint pairing sets, grouped by size then lexicographic."""
    if p > MAX_PAIRING_ORDER or q > MAX_PAIRING_ORDER:
        raise SizeError(f"pairing enumeration is guarded at p, q <= {MAX_PAIRING_ORDER}")
    out: list[PairingSet] = []
    for m in range(1, min(p, q) + 1):
        for rows in itertools.combinations(range(p), m):
            for cols in itertools.permutations(range(q), m):
                out.append(PairingSet(p, q, frozenset(zip(rows, cols))))
    return out


# -- moment functionals ---------------------------------------------------------


def gaussian_functional(h, hp, g) -> np.ndarray:
    """Moments of a mean-h circular Gaussian vector from first/second moments.

    ``h``: (..., p) unconjugated means, ``hp``: (..., q) conjugated means,
    ``g``: (..., p, q) raw mixed second moments E[Z_j Z_l^*].  Leading axes
    broadcast, which the jackknife uses for batched leave-one-out evaluation.
    """
    h = np.asarray(h, dtype=complex)
    hp = np.asarray(hp, dtype=complex)
    g = np.asarray(g, dtype=complex)
    p, q = h.shape[-1], hp.shape[-1]
    if g.shape[-2:] != (p, q):
        raise ConfigurationError(f"second-moment block must have shape (..., {p}, {q})")
    total = np.prod(h, axis=-1) * np.prod(hp, axis=-1)
    for pairing in enumerate_pairings(p, q):
        term = 1.0 + 0.0j
        for j, l in sorted(pairing.pairs):
            term = term * (g[..., j, l] - h[..., j] * hp[..., l])
        for j in range(p):
            if j not in pairing.rows:
                term = term * h[..., j]
        for l in range(q):
            if l not in pairing.cols:
                term = term * hp[..., l]
        total = total + term
    return total


def centered_functional(gt) -> np.ndarray:
    """Centered-moment functional: 0 for p != q, the permanent of gt for p = q.

    ``gt``: (..., p, q) centered second moments.
    """
    gt = np.asarray(gt, dtype=complex)
    p, q = gt.shape[-2:]
    if p != q:
        return np.zeros(gt.shape[:-2], dtype=complex)
    total = np.zeros(gt.shape[:-2], dtype=complex)
    for perm in itertools.permutations(range(p)):
        term = 1.0 + 0.0j
        for j in range(p):
            term = term * gt[..., j, perm[j]]
        total = total + term
    return total


# -- empirical moments ----------------------------------------------------------


def _loo_means(samples: np.ndarray) -> np.ndarray:
    """Leave-one-out means along axis 0."""
    n = samples.shape[0]
    total = samples.sum(axis=0)
    return (total - samples) / (n - 1)


def _product_samples(stats: EnsembleStats, xs, ys) -> np.ndarray:
    u = stats.field_samples
    w = np.ones(u.shape[0], dtype=complex)
    for j in xs:
        w = w * u[:, j]
    for l in ys:
        w = w * np.conj(u[:, l])
    return w


@dataclass(frozen=True)
class MomentEstimate:
    value: complex
    se: float
    n: int


def moment_estimate(stats: EnsembleStats, xs, ys) -> MomentEstimate:
    """Sample mean of prod u(x_j) prod u*(y_l) over realizations.

    The quoted error is the jackknife standard error, which for a plain mean
    equals sqrt(s^2 / n) with the unbiased sample variance s^2.
    """
    xs, ys = tuple(xs), tuple(ys)
    if len(xs) + len(ys) > MAX_MOMENT_ORDER:
        raise SizeError(f"moment order p+q is guarded at {MAX_MOMENT_ORDER}")
    _check_probe_columns(stats, xs + ys)
    w = _product_samples(stats, xs, ys)
    val = complex(stable_mean(w))
    var = np.sum(np.abs(w - val) ** 2) / (len(w) - 1)
    return MomentEstimate(val, float(np.sqrt(var / len(w))), len(w))


def centered_moment_estimate(stats: EnsembleStats, xs, ys) -> MomentEstimate:
    """Like :func:`moment_estimate` with sample means subtracted per probe.

    Centering uses the global sample means (plug-in); the induced O(1/n)
    bias is far below the quoted errors at the configured scales.
    """
    xs, ys = tuple(xs), tuple(ys)
    if len(xs) + len(ys) > MAX_MOMENT_ORDER:
        raise SizeError(f"moment order p+q is guarded at {MAX_MOMENT_ORDER}")
    _check_probe_columns(stats, xs + ys)
    u = stats.field_samples
    v = u - stable_mean(u, axis=0)
    w = np.ones(u.shape[0], dtype=complex)
    for j in xs:
        w = w * v[:, j]
    for l in ys:
        w = w * np.conj(v[:, l])
    val = complex(stable_mean(w))
    var = np.sum(np.abs(w - val) ** 2) / (len(w) - 1)
    return MomentEstimate(val, float(np.sqrt(var / len(w))), len(w))


def _check_probe_columns(stats: EnsembleStats, cols) -> None:
    p = stats.field_samples.shape[1]
    for c in cols:
        if not 0 <= int(c) < p:
            raise ConfigurationError(
                f"probe column {c} not recorded (stats holds {p} probes)"
            )


@dataclass(eq=False)
class MomentTensor:
    """Moment tensors over a probe list with plug-in standard errors."""

    p: int
    q: int
    probes: tuple[int, ...]
    values: np.ndarray
    ses: np.ndarray
    centered_values: np.ndarray
    centered_ses: np.ndarray
    n: int

    def value(self, xs, ys) -> complex:
        idx = tuple(self.probes.index(c) for c in tuple(xs) + tuple(ys))
        return complex(self.values[idx])


def empirical_moments(stats: EnsembleStats, p: int, q: int, probes) -> MomentTensor:
    """Full (p, q) moment tensor over the given probe columns, raw and centered."""
    if p + q > MAX_MOMENT_ORDER:
        raise SizeError(f"moment order p+q is guarded at {MAX_MOMENT_ORDER}")
    probes = tuple(int(c) for c in probes)
    _check_probe_columns(stats, probes)
    u = stats.field_samples[:, probes]
    n = u.shape[0]
    v = u - stable_mean(u, axis=0)

    def tensor_of(cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ops = [cols] * p + [np.conj(cols)] * q
        letters = "abcdefgh"[: p + q]
        sub = ",".join(f"n{c}" for c in letters) + "->" + letters
        if p + q == 0:
            raise ConfigurationError("p + q must be positive")
        mean = np.einsum(sub, *ops) / n
        absops = [np.abs(cols) ** 2] * (p + q)
        mean_sq = np.einsum(sub, *absops) / n
        var = np.maximum(mean_sq - np.abs(mean) ** 2, 0.0) * n / (n - 1)
        return mean, np.sqrt(var / n)

    values, ses = tensor_of(u)
    cvalues, cses = tensor_of(v)
    return MomentTensor(p, q, probes, values, ses, cvalues, cses, n)


# -- Gaussianity gap ------------------------------------------------------------


@dataclass(frozen=True)
class GaussianityGap:
    gap: float
    gap_se: float
    centered_gap: float
    centered_gap_se: float
    scale: float
    n: int


def gaussianity_gap(stats: EnsembleStats, p: int, q: int, probes) -> GaussianityGap:
    """Relative discrepancy between the (p, q) moment and its Gaussian prediction.

    ``probes`` lists p unconjugated then q conjugated probe columns.  The gap
    is |m_pq - F(m_10, m_11)| / scale with scale the product of per-point
    root second moments.  The centered analogue compares the centered (p, q)
    moment against the permanent functional of the raw second moments, which
    is the fully-developed-speckle prediction (mean zero); a deterministic
    field passes the first comparison trivially but fails this one, which is
    what makes it a usable negative control.  Errors are jackknife over
    realizations.
    """
    probes = tuple(int(c) for c in probes)
    if len(probes) != p + q:
        raise ConfigurationError("probes must list p unconjugated then q conjugated columns")
    if p + q > MAX_MOMENT_ORDER:
        raise SizeError(f"moment order p+q is guarded at {MAX_MOMENT_ORDER}")
    _check_probe_columns(stats, probes)
    xs, ys = probes[:p], probes[p:]
    u = stats.field_samples
    n = u.shape[0]

    w_full = _product_samples(stats, xs, ys)                      # (n,)
    h = u[:, xs]                                                  # (n, p)
    hp = np.conj(u[:, ys])                                        # (n, q)
    g = u[:, xs][:, :, np.newaxis] * np.conj(u[:, ys])[:, np.newaxis, :]   # (n, p, q)
    diag = np.abs(u[:, probes]) ** 2                              # (n, p+q)

    def evaluate(wm, hm, hpm, gm, diagm):
        pred = gaussian_functional(hm, hpm, gm)
        scale = np.prod(np.sqrt(np.maximum(diagm.real, 0.0)), axis=-1)
        return np.abs(wm - pred) / scale, scale

    scale0 = np.prod(np.sqrt(np.maximum(stable_mean(diag, axis=0).real, 0.0)))
    if not scale0 > 0:
        raise DiagnosticError("zero second moment at a probe; gap scale degenerate")

    gap, _ = evaluate(stable_mean(w_full), stable_mean(h, 0), stable_mean(hp, 0),
                      stable_mean(g, 0), stable_mean(diag, 0))
    loo_gap, _ = evaluate(_loo_means(w_full), _loo_means(h), _loo_means(hp),
                          _loo_means(g), _loo_means(diag))
    gap_se = math.sqrt((n - 1) / n * np.sum((loo_gap - np.mean(loo_gap)) ** 2))

    # Centered analogue: the centered (p, q) moment against the permanent
    # functional of the raw second moments.  For fully developed speckle the
    # mean vanishes and this tests circular Gaussianity; a deterministic
    # field has zero centered moments but nonzero raw second moments, so it
    # fails this comparison (the designed negative control).
    v = u - stable_mean(u, axis=0)
    wc = np.ones(n, dtype=complex)
    for j in xs:
        wc = wc * v[:, j]
    for l in ys:
        wc = wc * np.conj(v[:, l])

    def evaluate_centered(wm, gm, diagm):
        pred = centered_functional(gm)
        scale = np.prod(np.sqrt(np.maximum(diagm.real, 0.0)), axis=-1)
        return np.abs(wm - pred) / scale

    cgap = float(evaluate_centered(stable_mean(wc), stable_mean(g, 0), stable_mean(diag, 0)))
    loo_cgap = evaluate_centered(_loo_means(wc), _loo_means(g), _loo_means(diag))
    cgap_se = math.sqrt((n - 1) / n * np.sum((loo_cgap - np.mean(loo_cgap)) ** 2))

    return GaussianityGap(float(gap), float(gap_se), cgap, float(cgap_se), float(scale0), n)


# -- speckle statistics -----------------------------------------------------------


@dataclass(frozen=True)
class ScintillationEstimate:
    probe: int
    value: float
    se: float


def scintillation_index(stats: EnsembleStats, probes) -> list[ScintillationEstimate]:
    """(E[I^2] - E[I]^2) / E[I]^2 per probe with a delta-method standard error."""
    out = []
    probes = tuple(int(c) for c in probes)
    _check_probe_columns(stats, probes)
    for c in probes:
        i1 = stats.intensity_samples(c)
        n = len(i1)
        m1 = float(stable_mean(i1))
        if m1 <= 0:
            raise DiagnosticError(f"zero mean intensity at probe column {c}")
        i2 = i1**2
        m2 = float(stable_mean(i2))
        s = m2 / m1**2 - 1.0
        cov = np.cov(np.stack([i1, i2]))
        grad = np.array([-2.0 * m2 / m1**3, 1.0 / m1**2])
        se = float(np.sqrt(grad @ cov @ grad / n))
        out.append(ScintillationEstimate(c, s, se))
    return out


@dataclass(frozen=True)
class ExponentialLawReport:
    n: int
    ratios: dict
    ks_stat: float
    ks_threshold: float
    ks_pass: bool
    note: str

    @property
    def passed(self) -> bool:
        return self.ks_pass and all(abs(v - 1.0) <= 4.0 * se for v, se in self.ratios.values())


def exponential_law_test(samples, orders=(2, 3, 4), alpha: float = 0.05) -> ExponentialLawReport:
    """Moment-ratio and Kolmogorov-Smirnov tests against the exponential law.

    Ratios E[I^p] / (p! E[I]^p) equal 1 for exponential intensity; the KS
    statistic is compared with the exact small-sample critical value at the
    requested level.  The KS reference uses the estimated mean, so its level
    is conservative (Lilliefors-type bias); the ratio test is bias-free.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    n = samples.size
    if n < 1000:
        raise ConfigurationError(f"exponential-law test needs >= 1000 samples, got {n}")
    m1 = float(stable_mean(samples))
    ratios = {}
    for p in orders:
        wp = samples**p
        mp = _loo_means(wp)
        mo = _loo_means(samples)
        loo = mp / (math.factorial(p) * mo**p)
        val = float(stable_mean(wp)) / (math.factorial(p) * m1**p)
        se = math.sqrt((n - 1) / n * np.sum((loo - np.mean(loo)) ** 2))
        ratios[p] = (val, se)
    ks = sps.kstest(samples, "expon", args=(0.0, m1)).statistic
    threshold = float(sps.kstwo.isf(alpha, n))
    return ExponentialLawReport(
        n=n,
        ratios=ratios,
        ks_stat=float(ks),
        ks_threshold=threshold,
        ks_pass=bool(ks < threshold),
        note="KS reference uses the estimated mean (conservative level); "
             "the moment-ratio test is bias-free",
    )


@dataclass(frozen=True)
class SelfAveragingRow:
    box_cells: int
    box_length: float
    variance: float
    se: float


@dataclass(frozen=True)
class SelfAveragingReport:
    rows: tuple[SelfAveragingRow, ...]
    non_monotonic: tuple[int, ...]

    @property
    def monotone(self) -> bool:
        return not self.non_monotonic


def self_average(intensity_fields: np.ndarray, box_cells, dx: float) -> SelfAveragingReport:
    """Across-realization variance of box-averaged intensity per box size.

    Boxes are centered cubes of the given per-axis cell counts.  Entries
    whose variance increases with box size beyond combined two-sigma error
    bars are flagged as non-monotone.
    """
    fields = np.asarray(intensity_fields, dtype=float)
    n_real = fields.shape[0]
    shape = fields.shape[1:]
    rows = []
    for a in sorted(int(a) for a in box_cells):
        if a < 1 or any(a > s for s in shape):
            raise ConfigurationError(f"box of {a} cells does not fit the grid {shape}")
        sl = tuple(slice((s - a) // 2, (s - a) // 2 + a) for s in shape)
        means = fields[(slice(None),) + sl].mean(axis=tuple(range(1, fields.ndim)))
        var = float(np.var(means, ddof=1))
        dev = means - means.mean()
        m4 = float(np.mean(dev**4))
        se = math.sqrt(max(m4 - var**2, 0.0) / n_real)
        rows.append(SelfAveragingRow(a, a * dx, var, se))
    bad = tuple(
        i + 1
        for i in range(len(rows) - 1)
        if rows[i + 1].variance > rows[i].variance + 2.0 * (rows[i].se + rows[i + 1].se)
    )
    return SelfAveragingReport(tuple(rows), bad)
