"""Deterministic weighting rules and linear pooling of stage estimates.

Each adaptive round ``k = 1..K`` produces an unbiased estimate ``mu_hat_k``
together with an unbiased estimate of its variance. Pooling with fixed
weights that sum to one keeps the result unbiased, and the matching
variance estimate ``sum(w_k**2 * var_hat_k)`` is unbiased as well.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DegenerateWeights, InvalidArgument
from .summation import accurate_sum

__all__ = [
    "PowerLaw",
    "Exponential",
    "LastOnly",
    "Custom",
    "WeightRule",
    "SQRT_RULE",
    "StageEstimate",
    "CombinedEstimate",
    "make_weights",
    "combine",
]


@dataclass(frozen=True)
class PowerLaw:
    """Weights proportional to ``k**x``. ``x = 1/2`` is the square root rule."""

    x: float

    def __post_init__(self):
        if not math.isfinite(self.x):
            raise InvalidArgument(f"power-law exponent must be finite, got {self.x}")


@dataclass(frozen=True)
class Exponential:
    """Weights proportional to ``exp(k * x)`` for a rate ``x > 0``."""

    x: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and self.x > 0):
            raise InvalidArgument(f"exponential rate must be positive and finite, got {self.x}")


@dataclass(frozen=True)
class LastOnly:
    """All weight on the final stage."""


@dataclass(frozen=True)
class Custom:
    """An explicit weight vector, normalized to sum to one on construction.

    Negative entries are allowed (only the sum is constrained) but trigger a
    ``UserWarning`` since variance-optimal weights are never negative.
    """

    w: tuple = field()

    def __init__(self, w: Sequence[float]):
        arr = np.asarray(w, dtype=float).ravel()
        if arr.size == 0:
            raise InvalidArgument("custom weights must be non-empty")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument("custom weights must be finite")
        total = accurate_sum(arr)
        if total == 0.0:
            raise DegenerateWeights("custom weights sum to zero")
        if np.any(arr < 0):
            warnings.warn("custom weights contain negative entries", UserWarning, stacklevel=2)
        object.__setattr__(self, "w", tuple((arr / total).tolist()))

    @property
    def has_negative(self) -> bool:
        return any(v < 0 for v in self.w)


WeightRule = Union[PowerLaw, Exponential, LastOnly, Custom]

SQRT_RULE = PowerLaw(0.5)


def _normalized(raw: np.ndarray) -> np.ndarray:
    return raw / accurate_sum(raw)


def make_weights(rule: WeightRule, K: int) -> np.ndarray:
    """Return the ``K`` normalized weights prescribed by ``rule``.

    >>> make_weights(PowerLaw(0.0), 3).tolist()
    [0.3333333333333333, 0.3333333333333333, 0.3333333333333333]
    >>> make_weights(LastOnly(), 4).tolist()
    [0.0, 0.0, 0.0, 1.0]
    """
    if int(K) != K or K < 1:
        raise InvalidArgument(f"K must be a positive integer, got {K}")
    K = int(K)
    k = np.arange(1, K + 1, dtype=float)
    match rule:
        case PowerLaw(x=x):
            if abs(x) * math.log(K) < 600.0:
                w = _normalized(k**x)
            else:
                lw = x * np.log(k)
                w = _normalized(np.exp(lw - lw.max()))
        case Exponential(x=x):
            # exp((k - K) x): the largest term is exactly 1, nothing overflows.
            w = _normalized(np.exp((k - K) * x))
        case LastOnly():
            w = np.zeros(K)
            w[-1] = 1.0
        case Custom(w=cw):
            if len(cw) != K:
                raise InvalidArgument(f"custom weights have length {len(cw)}, expected K={K}")
            w = np.array(cw, dtype=float)
        case _:
            raise InvalidArgument(f"unknown weight rule {rule!r}")
    w.setflags(write=False)
    return w


@dataclass(frozen=True)
class StageEstimate:
    """Output of one adaptive round.

    ``var_hat`` estimates the variance of the stage mean ``mu_hat`` (the
    per-observation sample variance divided by ``n``). ``unbiased`` is False
    for self-normalized stages, whose bias is O(1/n).
    """

    mu_hat: float
    var_hat: float
    n: int
    unbiased: bool = True

    def __post_init__(self):
        if not math.isfinite(self.mu_hat):
            raise InvalidArgument(f"mu_hat must be finite, got {self.mu_hat}")
        if not (math.isfinite(self.var_hat) and self.var_hat >= 0):
            raise InvalidArgument(f"var_hat must be finite and non-negative, got {self.var_hat}")
        if int(self.n) != self.n or self.n < 1:
            raise InvalidArgument(f"n must be a positive integer, got {self.n}")


@dataclass(frozen=True)
class CombinedEstimate:
    mu_hat: float
    var_hat: float
    weights: tuple
    K: int

    @property
    def std_error(self) -> float:
        return math.sqrt(self.var_hat)


def combine(stages: Sequence[StageEstimate], rule: WeightRule) -> CombinedEstimate:
    """Pool stage estimates with the deterministic weights from ``rule``."""
    if len(stages) == 0:
        raise InvalidArgument("at least one stage estimate is required")
    K = len(stages)
    w = make_weights(rule, K)
    mu = np.array([s.mu_hat for s in stages], dtype=float)
    v = np.array([s.var_hat for s in stages], dtype=float)
    # sum(w * mu) written as mu_1 + sum(w * (mu - mu_1)), using sum(w) = 1;
    # identical stages then pool back to exactly that value.
    return CombinedEstimate(
        mu_hat=mu[0] + accurate_sum(w * (mu - mu[0])),
        var_hat=accurate_sum(w * w * v),
        weights=tuple(w.tolist()),
        K=K,
    )
