"""Accurate summation helpers.

``math.fsum`` gives correctly rounded totals and is used wherever a single
sum is needed. Running (prefix) sums use Neumaier's variant of Kahan
summation so that every partial total keeps a relative error near one ulp.
"""

from __future__ import annotations

import math

import numpy as np

# Power sums beyond this many terms are refused rather than silently
# degraded (memory for the term array, and the 1e-13 accuracy contract).
MAX_TERMS = 10**7


def accurate_sum(values) -> float:
    """Correctly rounded sum of ``values``."""
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


def compensated_cumsum(values) -> np.ndarray:
    """Prefix sums of ``values`` with Neumaier compensation.

    Returns an array ``out`` with ``out[j] == sum(values[:j + 1])`` up to a
    relative error of a few ulps, independent of the length.
    """
    vals = np.asarray(values, dtype=float).ravel()
    out = np.empty_like(vals)
    s = 0.0
    c = 0.0
    for j, v in enumerate(vals.tolist()):
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        out[j] = s + c
    return out


def powers(x: float, K: int) -> np.ndarray:
    """The terms 1**x, 2**x, ..., K**x as a float array."""
    return np.arange(1, K + 1, dtype=float) ** x
