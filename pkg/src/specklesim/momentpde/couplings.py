"""Sign and shift matrices coupling the dual variables of moment evolution.

For the (p, q) moment in dual variables v = (xi_1..xi_p, zeta_1..zeta_q) the
evolution couples components through three matrix families:

* ``Theta``: block diagonal, +1 blocks for the p unconjugated factors and
  -1 blocks for the q conjugated ones;
* ``A[(j, l)]``: shifts xi_j and zeta_l together (identity at blocks j and
  p + l), with A^T Theta A = 0 and the reduced phase k^T A^T Theta v =
  k.(xi_j - zeta_l);
* ``B[(j, j')]``: shifts a same-type pair in opposite directions (identity
  at block j, minus identity at block j'), with B^T Theta B = +/- 2 I.

All invariants are verified at construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError


@dataclass(frozen=True, eq=False)
class CouplingMatrices:
    p: int
    q: int
    d: int
    theta: np.ndarray
    a: dict          # (j, l) -> ((p+q)d, d), j in 0..p-1, l in 0..q-1
    b: dict          # (j, jp) global axis pairs, both < p or both >= p

    @property
    def n_axes(self) -> int:
        return self.p + self.q


def build_couplings(p: int, q: int, d: int = 1) -> CouplingMatrices:
    """Construct Theta, all A_(j,l) and all admissible B_(j,j')."""
    if p < 0 or q < 0 or p + q == 0:
        raise ConfigurationError("need p, q >= 0 with p + q >= 1")
    if d < 1:
        raise ConfigurationError("d must be >= 1")
    total = (p + q) * d
    signs = np.concatenate([np.ones(p), -np.ones(q)])
    theta = np.kron(np.diag(signs), np.eye(d))

    def block(col_signs: dict) -> np.ndarray:
        mat = np.zeros((total, d))
        for idx, sign in col_signs.items():
            mat[idx * d:(idx + 1) * d, :] = sign * np.eye(d)
        return mat

    a = {(j, l): block({j: 1.0, p + l: 1.0}) for j in range(p) for l in range(q)}
    b = {}
    for j in range(p):
        for jp in range(j + 1, p):
            b[(j, jp)] = block({j: 1.0, jp: -1.0})
    for l in range(q):
        for lp in range(l + 1, q):
            b[(p + l, p + lp)] = block({p + l: 1.0, p + lp: -1.0})

    _verify(p, q, d, theta, a, b)
    return CouplingMatrices(p, q, d, theta, a, b)


def _verify(p, q, d, theta, a, b):
    eye = np.eye(d)
    for (j, l), mat in a.items():
        if not np.array_equal(mat.T @ theta @ mat, np.zeros((d, d))):
            raise AssertionError("A^T Theta A != 0")
        for (j2, l2), mat2 in a.items():
            if j2 == j and l2 != l:
                if not np.array_equal(mat.T @ theta @ mat2, eye):
                    raise AssertionError("A^T Theta A' != I for a shared unconjugated index")
    for (j, jp), mat in b.items():
        expected = 2.0 * eye if jp < p else -2.0 * eye
        if not np.array_equal(mat.T @ theta @ mat, expected):
            raise AssertionError("B^T Theta B != +-2 I")
    # reduced phase k^T A^T Theta v = k.(xi_j - zeta_l) on a random probe
    rng = np.random.default_rng(0)
    v = rng.normal(size=(p + q) * d)
    k = rng.normal(size=d)
    for (j, l), mat in a.items():
        lhs = k @ (mat.T @ theta @ v)
        rhs = k @ (v[j * d:(j + 1) * d] - v[(p + l) * d:(p + l + 1) * d])
        if abs(lhs - rhs) > 1e-12 * max(1.0, abs(rhs)):
            raise AssertionError("reduced A-phase identity violated")
