"""Small numeric helpers shared across modules."""

from __future__ import annotations

import numpy as np


def stable_sum(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Neumaier-compensated sum along an axis.

    Used by the moment accumulators so that estimates stay accurate for
    realization counts beyond ~1e5.  Complex input is compensated per
    component.
    """
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return stable_sum(values.real, axis) + 1j * stable_sum(values.imag, axis)
    values = np.moveaxis(values, axis, 0)
    total = np.zeros(values.shape[1:], dtype=float)
    comp = np.zeros_like(total)
    for row in values:
        t = total + row
        big = np.abs(total) >= np.abs(row)
        comp += np.where(big, (total - t) + row, (row - t) + total)
        total = t
    return total + comp


def stable_mean(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Compensated mean along an axis."""
    n = np.asarray(values).shape[axis]
    return stable_sum(values, axis=axis) / n
