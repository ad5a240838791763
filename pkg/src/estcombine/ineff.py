"""Inefficiency of deterministic weighting rules.

The inefficiency of a rule is the variance of the pooled estimate it
produces divided by the variance of the best linear combination (weights
proportional to inverse stage variances). Under the working model
``Var(mu_hat_k) = tau2 * k**-y`` with weights ``k**x`` this is

    rho_K(x | y) = S(2x - y) * S(y) / S(x)**2,   S(a) = sum_{i<=K} i**a.

The module also covers the exponential-decay analogue, worst cases over a
range of decay rates, their large-K limits and the integral bounds on
``S(a)`` used to reason about those limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidArgument
from .summation import MAX_TERMS, accurate_sum, compensated_cumsum, powers

__all__ = [
    "RateBounds",
    "PowerLawModel",
    "IneffReport",
    "power_sum",
    "power_sum_prefix",
    "rho",
    "rho_curve",
    "rho_general",
    "rho_custom",
    "ineff_report",
    "sup_rho_over_y",
    "asymptotic_ineff",
    "gamma",
    "gamma_brute_force",
    "gamma_last_iterate_limit",
    "integral_bounds",
    "halfrule_ratios",
    "rho_halfrule_monotone_check",
    "minimax_scan",
    "is_nondecreasing_in_K",
]

# Below this |a| the geometric sum sum_i exp(a i) is treated via its Taylor
# expansion around the removable singularity at a = 0.
_GEOMETRIC_EPS = 1e-9


def _check_K(K) -> int:
    if int(K) != K or K < 1:
        raise InvalidArgument(f"K must be a positive integer, got {K}")
    if K > MAX_TERMS:
        raise InvalidArgument(f"K={K} exceeds the supported maximum of {MAX_TERMS} terms")
    return int(K)


@dataclass(frozen=True)
class RateBounds:
    """Known range ``L <= y <= U`` for the variance decay rate."""

    L: float
    U: float

    def __post_init__(self):
        if not (math.isfinite(self.L) and math.isfinite(self.U)):
            raise InvalidArgument("rate bounds must be finite")
        if not 0 <= self.L <= self.U:
            raise InvalidArgument(f"need 0 <= L <= U, got L={self.L}, U={self.U}")

    @property
    def M(self) -> float:
        """Midpoint, used as the weighting exponent."""
        return (self.L + self.U) / 2


@dataclass(frozen=True)
class PowerLawModel:
    y: float
    tau2: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.y) and self.y >= 0):
            raise InvalidArgument(f"decay rate y must be finite and >= 0, got {self.y}")
        if not (math.isfinite(self.tau2) and self.tau2 > 0):
            raise InvalidArgument(f"tau2 must be positive and finite, got {self.tau2}")

    def variances(self, K: int) -> np.ndarray:
        return self.tau2 * powers(-self.y, _check_K(K))


@dataclass(frozen=True)
class IneffReport:
    value: float
    K: int
    rule_exponent: float
    model: str


def power_sum(x: float, K: int) -> float:
    """Correctly rounded ``sum_{i=1}^K i**x``."""
    K = _check_K(K)
    if x == 0:
        return float(K)
    return accurate_sum(powers(x, K))


def power_sum_prefix(x: float, K_max: int) -> np.ndarray:
    """``[power_sum(x, K) for K in 1..K_max]`` in one compensated pass."""
    return compensated_cumsum(powers(x, _check_K(K_max)))


def rho(x: float, y: float, K: int) -> float:
    """Inefficiency of weights ``k**x`` when the variances decay like ``k**-y``."""
    K = _check_K(K)
    if K == 1 or x == y:
        return 1.0
    return power_sum(2 * x - y, K) * power_sum(y, K) / power_sum(x, K) ** 2


def rho_curve(x: float, y: float, K_max: int) -> np.ndarray:
    """``rho(x, y, K)`` for every ``K = 1..K_max``."""
    K_max = _check_K(K_max)
    if x == y:
        return np.ones(K_max)
    num = power_sum_prefix(2 * x - y, K_max) * power_sum_prefix(y, K_max)
    out = num / power_sum_prefix(x, K_max) ** 2
    out[0] = 1.0
    return out


def _as_profile(variances) -> np.ndarray:
    v = np.asarray(getattr(variances, "v", variances), dtype=float).ravel()
    if v.size == 0:
        raise InvalidArgument("variance profile must be non-empty")
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise InvalidArgument("variance profile entries must be positive and finite")
    return v


def rho_general(variances) -> float:
    """Inefficiency of the square root rule for an arbitrary variance profile.

    The square-root-rule variance ``sum(k v_k) / (sum sqrt(k))**2`` divided
    by the optimal variance ``1 / sum(1 / v_k)``. Accepts an array or a
    ``VarianceProfile``.
    """
    v = _as_profile(variances)
    k = np.arange(1, v.size + 1, dtype=float)
    s_half = accurate_sum(np.sqrt(k))
    return accurate_sum(k * v) * accurate_sum(1.0 / v) / s_half**2


def rho_custom(variances, weights: Sequence[float]) -> float:
    """Inefficiency ``sum(w_k**2 v_k) * sum(1 / v_k)`` of explicit weights.

    ``weights`` must already sum to one.
    """
    v = _as_profile(variances)
    w = np.asarray(weights, dtype=float).ravel()
    if w.size != v.size:
        raise InvalidArgument(f"weights have length {w.size}, profile has length {v.size}")
    if abs(accurate_sum(w) - 1.0) > 1e-12:
        raise InvalidArgument("weights must sum to one")
    return accurate_sum(w * w * v) * accurate_sum(1.0 / v)


def ineff_report(x: float, y: float, K: int) -> IneffReport:
    return IneffReport(value=rho(x, y, K), K=int(K), rule_exponent=x, model=f"power-law y={y!r}")


class SupResult(NamedTuple):
    value: float
    argmax_y: float


def sup_rho_over_y(x: float, bounds: RateBounds, K: int) -> SupResult:
    """Worst-case ``rho(x, y, K)`` over ``y`` in ``[L, U]``.

    ``rho`` is convex in ``y``, so the supremum sits at an endpoint: ``U``
    when ``x <= M`` and ``L`` otherwise (ties at ``x == M`` report ``U``).
    """
    if not bounds.L <= x <= bounds.U:
        raise InvalidArgument(f"x={x} outside [{bounds.L}, {bounds.U}]")
    at_L = rho(x, bounds.L, K)
    at_U = rho(x, bounds.U, K)
    argmax = bounds.U if x <= bounds.M else bounds.L
    return SupResult(max(at_L, at_U), argmax)


def asymptotic_ineff(bounds: RateBounds) -> float:
    """Large-K limit of the worst case for midpoint weights: (M+1)^2/((L+1)(U+1))."""
    return (bounds.M + 1) ** 2 / ((bounds.L + 1) * (bounds.U + 1))


def _split_log_geometric(a: float, K: int) -> tuple[float, float]:
    """Write log(sum_{i=1}^K exp(a i)) as ``K * slope + rest``.

    ``slope`` is ``a`` for clearly positive ``a`` and 0 otherwise, so
    ``rest`` stays O(log K) and the large linear parts of several sums can
    be cancelled exactly before scaling by ``K``.
    """
    if abs(a) < _GEOMETRIC_EPS:
        # K * (1 + (K + 1) a / 2 + O((K a)^2)); exactly K at a = 0.
        return 0.0, math.log(K) + math.log1p((K + 1) * a / 2)
    if a > 0:
        # e^{Ka} (1 - e^{-Ka}) / (1 - e^{-a})
        return a, math.log(-math.expm1(-K * a)) - math.log(-math.expm1(-a))
    # e^a (1 - e^{Ka}) / (1 - e^a)
    return 0.0, a + math.log(-math.expm1(K * a)) - math.log(-math.expm1(a))


def _log_geometric_sum(a: float, K: int) -> float:
    slope, rest = _split_log_geometric(a, K)
    return K * slope + rest


def gamma(x: float, y: float, K: int) -> float:
    """Inefficiency of weights ``exp(k x)`` when variances decay like ``exp(-k y)``."""
    if not (x > 0 and y > 0):
        raise InvalidArgument(f"x and y must be positive, got x={x}, y={y}")
    K = _check_K(K)
    if K == 1 or x == y:
        return 1.0
    s1, r1 = _split_log_geometric(2 * x - y, K)
    s2, r2 = _split_log_geometric(y, K)
    s3, r3 = _split_log_geometric(x, K)
    return math.exp(K * math.fsum([s1, s2, -2 * s3]) + (r1 + r2 - 2 * r3))


def gamma_brute_force(x: float, y: float, K: int) -> float:
    """Direct-summation version of :func:`gamma`, for cross-checking."""
    i = np.arange(1, K + 1, dtype=float)
    # Factor out the largest exponent of each sum before exponentiating.
    def lsum(a):
        e = a * i
        m = e.max()
        return m + math.log(accurate_sum(np.exp(e - m)))

    return math.exp(lsum(2 * x - y) + lsum(y) - 2 * lsum(x))


class LastIterateLimit(NamedTuple):
    value: float
    bound: float


def gamma_last_iterate_limit(y: float, K: int) -> LastIterateLimit:
    """Inefficiency of keeping only the final stage under exponential decay.

    ``value`` is ``e^y (1 - e^{-Ky}) / (e^y - 1)`` and ``bound`` is the
    K-free cap ``e^y / (e^y - 1)``.
    """
    if not y > 0:
        raise InvalidArgument(f"y must be positive, got {y}")
    K = _check_K(K)
    denom = -math.expm1(-y)
    return LastIterateLimit(-math.expm1(-K * y) / denom, 1.0 / denom)


class IntegralBounds(NamedTuple):
    lower: float
    upper: float


def integral_bounds(x: float, K: int) -> IntegralBounds:
    """Integral bounds on ``power_sum(x, K)`` valid for ``0 <= x <= 1``.

    lower: integral of v**x over [1/2, K + 1/2] (midpoint rule, concavity);
    upper: integral of v**x over [1, K + 1].
    """
    if not 0 <= x <= 1:
        raise InvalidArgument(f"x must lie in [0, 1], got {x}")
    K = _check_K(K)
    p = x + 1
    lower = ((K + 0.5) ** p - 0.5**p) / p
    upper = ((K + 1) ** p - 1) / p
    return IntegralBounds(lower, upper)


def halfrule_ratios(K_max: int) -> np.ndarray:
    """``rho_{K+1}(1/2|1) / rho_K(1/2|1)`` for ``K = 1..K_max-1``.

    Uses ``rho_K(1/2|1) = K^2 (K+1) / 2 / S_K^2`` with ``S_K`` the running
    sum of square roots.
    """
    K_max = _check_K(K_max)
    K = np.arange(1, K_max + 1, dtype=float)
    s = power_sum_prefix(0.5, K_max)
    vals = K * K * (K + 1) / 2 / (s * s)
    return vals[1:] / vals[:-1]


def rho_halfrule_monotone_check(K_max: int) -> bool:
    """True iff the square-root rule's worst case grows strictly with K up to K_max."""
    if K_max < 2:
        raise InvalidArgument(f"K_max must be at least 2, got {K_max}")
    return bool(np.all(halfrule_ratios(K_max) > 1.0))


class MinimaxScan(NamedTuple):
    best_x: float | None
    sup_values: np.ndarray
    degenerate: bool


def minimax_scan(K: int, x_grid: Sequence[float]) -> MinimaxScan:
    """Worst case over ``y in {0, 1}`` for each grid exponent, and its minimizer.

    For ``K == 1`` every rule is equivalent; the scan is flagged
    ``degenerate`` and ``best_x`` is None.
    """
    K = _check_K(K)
    grid = np.asarray(x_grid, dtype=float).ravel()
    if grid.size == 0 or np.any((grid < 0) | (grid > 1)):
        raise InvalidArgument("x_grid must be a non-empty subset of [0, 1]")
    if not np.any(grid == 0.5):
        raise InvalidArgument("x_grid must contain 0.5")
    sups = np.array([max(rho(x, 0.0, K), rho(x, 1.0, K)) for x in grid.tolist()])
    if K == 1:
        return MinimaxScan(None, sups, True)
    return MinimaxScan(float(grid[int(np.argmin(sups))]), sups, False)


def is_nondecreasing_in_K(bounds: RateBounds, K_max: int) -> bool:
    """Check whether ``rho_K(M | U)`` is nondecreasing for ``K = 1..K_max``.

    Only an empirical probe: no general proof is known outside L=0, U=1.
    """
    curve = rho_curve(bounds.M, bounds.U, K_max)
    return bool(np.all(np.diff(curve) >= -1e-15 * curve[1:]))
