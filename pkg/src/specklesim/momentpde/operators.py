"""Coupling operators acting on dual-grid measures.

Both operator families reduce, for the pair of coupled axes (ax1, ax2), to

    out(v) += sum_t P12[t, i1, i2] * rho(..., i1 - o_t, ..., i2 -+ o_t, ...),

with a rank-one complex phase table P12 (the reduced phases are linear in
v along each axis) and integer cell offsets o_t, because the wavenumber
quadrature runs over the measure's own lattice.  A fused numba kernel is
used when available (SPECKLESIM_NO_NUMBA=1 forces the numpy path); both
paths are exercised against each other in the tests.
"""

from __future__ import annotations

import math
import os

import numpy as np

from ..core.covariance import CovarianceModel
from ..core.regimes import RegimeScaling
from ..errors import ConfigurationError
from .measures import GridMeasure

_USE_NUMBA = os.environ.get("SPECKLESIM_NO_NUMBA", "") != "1"
if _USE_NUMBA:
    try:
        import numba
    except Exception:  # pragma: no cover - environment dependent
        numba = None
        _USE_NUMBA = False


def _pair_apply_numpy(vals, out, p12, offsets, opposite):
    """Reference path: vals, out of shape (n, n, m); p12 of shape (nk, n, n)."""
    n = vals.shape[0]
    for t in range(len(offsets)):
        o = int(offsets[t])
        o2 = -o if opposite else o
        sl1o = slice(max(0, o), n + min(0, o))
        sl1i = slice(max(0, -o), n + min(0, -o))
        sl2o = slice(max(0, o2), n + min(0, o2))
        sl2i = slice(max(0, -o2), n + min(0, -o2))
        out[sl1o, sl2o, :] += p12[t, sl1o, sl2o, np.newaxis] * vals[sl1i, sl2i, :]


if _USE_NUMBA and numba is not None:

    @numba.njit(parallel=True, fastmath=False, cache=True)
    def _pair_apply_numba(vals, out, p12, offsets, opposite):  # pragma: no cover - jit
        n = vals.shape[0]
        m = vals.shape[2]
        nk = offsets.shape[0]
        for i1 in numba.prange(n):
            for t in range(nk):
                o = offsets[t]
                j1 = i1 - o
                if j1 < 0 or j1 >= n:
                    continue
                o2 = -o if opposite else o
                lo2 = max(0, o2)
                hi2 = n + min(0, o2)
                for i2 in range(lo2, hi2):
                    ph = p12[t, i1, i2]
                    j2 = i2 - o2
                    for r in range(m):
                        out[i1, i2, r] += ph * vals[j1, j2, r]

else:  # pragma: no cover - environment dependent
    _pair_apply_numba = None


def pair_apply(rho: GridMeasure, out: GridMeasure, ax1: int, ax2: int,
               offsets: np.ndarray, p12: np.ndarray, opposite: bool,
               coef_abs: np.ndarray) -> float:
    """Accumulate one coupled-pair operator into ``out``; returns leaked TV.

    ``coef_abs`` holds |weights| per lattice wavenumber for leak accounting:
    mass shifted beyond the box is dropped, and the corresponding total
    variation sum_t |w_t| * (dropped |rho|) * cellvol is returned.
    """
    n = rho.n
    naxes = rho.values.ndim
    vals = np.moveaxis(rho.values, (ax1, ax2), (0, 1))
    rest = int(np.prod(vals.shape[2:])) if naxes > 2 else 1
    vals_c = np.ascontiguousarray(vals).reshape(n, n, rest)
    acc = np.zeros_like(vals_c)

    if _USE_NUMBA and _pair_apply_numba is not None:
        _pair_apply_numba(vals_c, acc, p12, offsets.astype(np.int64), bool(opposite))
    else:
        _pair_apply_numpy(vals_c, acc, p12, offsets, opposite)

    acc = np.moveaxis(acc.reshape(vals.shape), (0, 1), (ax1, ax2))
    out.values += acc

    marg = np.abs(vals_c).sum(axis=2)
    tot = marg.sum()
    leaked = 0.0
    for t in range(len(offsets)):
        o = int(offsets[t])
        o2 = -o if opposite else o
        sl1 = slice(max(0, -o), n + min(0, -o))
        sl2 = slice(max(0, -o2), n + min(0, -o2))
        kept = marg[sl1, sl2].sum()
        leaked += coef_abs[t] * (tot - kept)
    return float(leaked * rho.cell_volume)


def _lattice_weights(rho: GridMeasure, scaling: RegimeScaling, model: CovarianceModel):
    """Quadrature weights w_t = (k0^2/4 eta^2) R_hat(k_t) dk / (2 pi) on the lattice."""
    if model.d != 1:
        raise ConfigurationError("the moment-evolution solver is scoped to d = 1 models")
    k = rho.axis
    spec = model.spectrum(k[:, np.newaxis])
    w = (scaling.k0**2 / (4.0 * scaling.eta**2)) * spec * rho.dv / (2.0 * math.pi)
    offsets = np.arange(rho.n) - rho.n // 2
    return k, offsets, w


def _check_scope(rho: GridMeasure):
    if rho.p + rho.q > 4:
        raise ConfigurationError("moment-evolution solver is scoped to p + q <= 4")


def l1_tables(rho: GridMeasure, z: float, scaling: RegimeScaling, model: CovarianceModel):
    """Offsets, |w|, and rank-one phase table for one A-type operator at time z."""
    k, offsets, w = _lattice_weights(rho, scaling, model)
    theta = z * scaling.eta / (scaling.k0 * scaling.epsilon)
    ph = np.exp(1j * theta * np.outer(k, rho.axis))       # (nk, n)
    p12 = (w[:, np.newaxis, np.newaxis] * ph[:, :, np.newaxis] * np.conj(ph)[:, np.newaxis, :])
    return offsets, np.abs(w), p12


def l2_tables(rho: GridMeasure, z: float, scaling: RegimeScaling, model: CovarianceModel,
              sign: float):
    """Tables for one B-type operator; sign is +1 (unconjugated) or -1 (conjugated)."""
    k, offsets, w = _lattice_weights(rho, scaling, model)
    theta = z * scaling.eta / (scaling.k0 * scaling.epsilon)
    ph = np.exp(1j * sign * theta * np.outer(k, rho.axis))
    scalar = -w * np.exp(-1j * sign * theta * k**2)       # leading minus of the B family
    p12 = (scalar[:, np.newaxis, np.newaxis] * ph[:, :, np.newaxis] * np.conj(ph)[:, np.newaxis, :])
    return offsets, np.abs(w), p12


def apply_L1(gamma: tuple[int, int], rho: GridMeasure, z: float,
             scaling: RegimeScaling, model: CovarianceModel) -> tuple[GridMeasure, float]:
    """A-type operator for the pair gamma = (j, l), 0-based; returns (measure, leaked TV)."""
    _check_scope(rho)
    j, l = gamma
    if not (0 <= j < rho.p and 0 <= l < rho.q):
        raise ConfigurationError(f"pair {gamma} outside p={rho.p}, q={rho.q}")
    out = rho.zeros_like()
    offsets, coef_abs, p12 = l1_tables(rho, z, scaling, model)
    leaked = pair_apply(rho, out, j, rho.p + l, offsets, p12, False, coef_abs)
    return out, leaked


def apply_L2(j: int, jp: int, rho: GridMeasure, z: float,
             scaling: RegimeScaling, model: CovarianceModel) -> tuple[GridMeasure, float]:
    """B-type operator for global axes j < jp (both unconjugated or both conjugated)."""
    _check_scope(rho)
    p, total = rho.p, rho.p + rho.q
    if not (0 <= j < jp < total):
        raise ConfigurationError(f"need 0 <= j < jp < {total}")
    if (j < p) != (jp < p):
        raise ConfigurationError("B-type operators couple two axes of one conjugation type")
    sign = 1.0 if jp < p else -1.0
    out = rho.zeros_like()
    offsets, coef_abs, p12 = l2_tables(rho, z, scaling, model, sign)
    leaked = pair_apply(rho, out, j, jp, offsets, p12, True, coef_abs)
    return out, leaked


def damping_rate_l_eta(scaling: RegimeScaling, model: CovarianceModel) -> float:
    """Scalar rate of the L_eta part: C0 / eta^2 with C0 = k0^2 R(0) / 4."""
    return scaling.k0**2 * model.r0 / (4.0 * scaling.eta**2)
