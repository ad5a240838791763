"""Families of stage-variance profiles and robustness sweeps over them."""

from __future__ import annotations

import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import streams
from .errors import InvalidArgument
from .ineff import rho_general
from .summation import accurate_sum

__all__ = [
    "VarianceProfile",
    "ConvexDecreasingSampler",
    "SweepResult",
    "PlateauSweep",
    "profile_power_law",
    "profile_plateau",
    "profile_transient",
    "sample_convex_decreasing",
    "convex_profile_violations",
    "sweep_plateau",
    "sweep_convex",
    "default_workers",
]

NINE_EIGHTHS = 9 / 8

# Samples per work unit in sweep_convex. Fixed so that results never depend
# on how many workers share the units.
CHUNK = 1 << 16

# Slack for the convexity check: generation enforces the constraint on a
# rounded 2*s[k-1] - s[k-2], the check re-derives it from rounded differences.
_CONVEX_ATOL = 8 * np.finfo(float).eps


class VarianceProfile:
    """Positive stage variances ``v[k-1] = Var(mu_hat_k)`` with a label."""

    __slots__ = ("v", "label")

    def __init__(self, v, label: str = ""):
        arr = np.array(v, dtype=float).ravel()
        if arr.size == 0:
            raise InvalidArgument("variance profile must be non-empty")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise InvalidArgument("variance profile entries must be positive and finite")
        arr.setflags(write=False)
        object.__setattr__(self, "v", arr)
        object.__setattr__(self, "label", label)

    def __setattr__(self, name, value):
        raise AttributeError("VarianceProfile is immutable")

    def __len__(self):
        return self.v.size

    def __eq__(self, other):
        if not isinstance(other, VarianceProfile):
            return NotImplemented
        return np.array_equal(self.v, other.v)

    def __hash__(self):
        return hash(self.v.tobytes())

    def __repr__(self):
        return f"VarianceProfile({self.v.tolist()!r}, label={self.label!r})"

    @property
    def K(self) -> int:
        return self.v.size

    def scaled(self, c: float) -> "VarianceProfile":
        return VarianceProfile(self.v * c, self.label)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("k,variance\n")
        for k, val in enumerate(self.v.tolist(), start=1):
            buf.write(f"{k},{val!r}\n")
        return buf.getvalue()


def profile_power_law(y: float, K: int) -> VarianceProfile:
    if int(K) != K or K < 1:
        raise InvalidArgument(f"K must be a positive integer, got {K}")
    k = np.arange(1, int(K) + 1, dtype=float)
    return VarianceProfile(k ** (-y), f"power-law y={y!r}")


def profile_plateau(k1: int, k2: int) -> VarianceProfile:
    """``1/k`` for ``k <= k1`` followed by ``k2`` entries of ``1/(k1+1)``."""
    if k1 < 1 or k2 < 0:
        raise InvalidArgument(f"need k1 >= 1 and k2 >= 0, got k1={k1}, k2={k2}")
    head = 1.0 / np.arange(1, k1 + 1, dtype=float)
    tail = np.full(k2, 1.0 / (k1 + 1))
    return VarianceProfile(np.concatenate([head, tail]), f"plateau k1={k1} k2={k2}")


def profile_transient(flat_len: int, flat_var: float, tail_len: int, tail_var: float) -> VarianceProfile:
    """A flat initial transient followed by a lower flat tail."""
    if flat_len < 1 or tail_len < 1:
        raise InvalidArgument("segment lengths must be at least 1")
    if not (flat_var > 0 and tail_var > 0):
        raise InvalidArgument("variances must be positive")
    v = np.concatenate([np.full(flat_len, float(flat_var)), np.full(tail_len, float(tail_var))])
    return VarianceProfile(v, f"transient {flat_len}x{flat_var!r} then {tail_len}x{tail_var!r}")


@dataclass(frozen=True)
class ConvexDecreasingSampler:
    """Draws one random convex, decreasing profile with ``v_1 = 1`` and ``v_k >= 1/k``."""

    K: int
    seed: int

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise InvalidArgument(f"K must be a positive integer, got {self.K}")
        streams.check_seed(self.seed)


def _between(lo, hi, u):
    # Uniform on [lo, hi]; intervals narrower than 1e-15 collapse to lo.
    width = hi - lo
    return np.where(width < 1e-15, lo, np.minimum(lo + width * u, hi))


def _convex_profiles(seeds: np.ndarray, K: int) -> np.ndarray:
    """One profile per seed, shape ``(len(seeds), K)``.

    v_1 = 1, v_2 ~ U[1/2, 1] and, for k >= 3,
    v_k ~ U[max(1/k, 2 v_{k-1} - v_{k-2}), v_{k-1}].
    """
    m = seeds.shape[0]
    v = np.empty((m, K))
    v[:, 0] = 1.0
    if K == 1:
        return v
    u = streams.uniforms(seeds, K - 1)
    v[:, 1] = _between(0.5, 1.0, u[:, 0])
    for k in range(3, K + 1):
        lo = np.maximum(1.0 / k, 2.0 * v[:, k - 2] - v[:, k - 3])
        v[:, k - 1] = _between(lo, v[:, k - 2], u[:, k - 2])
    return v


def convex_profile_violations(v) -> np.ndarray:
    """Per-row flags for broken sampler constraints (start, floor, monotone, convex)."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    K = v.shape[1]
    k = np.arange(1, K + 1, dtype=float)
    bad = v[:, 0] != 1.0
    bad |= np.any(v < 1.0 / k, axis=1)
    if K >= 2:
        d = v[:, :-1] - v[:, 1:]
        bad |= np.any(d < 0, axis=1)
        if K >= 3:
            bad |= np.any(d[:, :-1] - d[:, 1:] < -_CONVEX_ATOL, axis=1)
    return bad


def sample_convex_decreasing(sampler: ConvexDecreasingSampler) -> VarianceProfile:
    v = _convex_profiles(np.array([sampler.seed], dtype=np.uint64), sampler.K)
    if convex_profile_violations(v)[0]:
        raise RuntimeError(f"sampled profile violates its constraints: {v[0].tolist()}")
    return VarianceProfile(v[0], f"convex-decreasing K={sampler.K} seed={sampler.seed}")


def _rho_rows(v: np.ndarray) -> np.ndarray:
    k = np.arange(1, v.shape[1] + 1, dtype=float)
    s_half = accurate_sum(np.sqrt(k))
    return (v @ k) * (1.0 / v).sum(axis=1) / s_half**2


class PlateauSweep(NamedTuple):
    max_rho: float
    argmax: tuple


def sweep_plateau(k1_max: int, k2_max: int) -> PlateauSweep:
    """Exhaustive worst case of the square root rule over plateau profiles."""
    if k1_max < 1 or k2_max < 1:
        raise InvalidArgument(f"bounds must be >= 1, got k1_max={k1_max}, k2_max={k2_max}")
    best = (-math.inf, (0, 0))
    for k1 in range(1, k1_max + 1):
        for k2 in range(1, k2_max + 1):
            r = rho_general(profile_plateau(k1, k2))
            if r > best[0]:
                best = (r, (k1, k2))
    return PlateauSweep(*best)


@dataclass(frozen=True)
class SweepResult:
    K: int
    count_total: int
    count_exceeding: int
    worst_rho: float
    worst_index: int
    worst_profile: VarianceProfile
    seed: int
    threshold: float

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "n_samples": self.count_total,
            "seed": self.seed,
            "threshold": self.threshold,
            "count_exceeding": self.count_exceeding,
            "worst_rho": self.worst_rho,
            "worst_index": self.worst_index,
            "worst_profile": self.worst_profile.v.tolist(),
        }


def default_workers() -> int:
    """Worker count, capped by the ESTCOMBINE_THREADS environment variable."""
    n = os.cpu_count() or 1
    cap = os.environ.get("ESTCOMBINE_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


def _sweep_chunk(K, seed, start, stop, threshold):
    seeds = streams.derive_seeds(seed, np.arange(start, stop, dtype=np.uint64))
    v = _convex_profiles(seeds, K)
    bad = convex_profile_violations(v)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise RuntimeError(f"sample {start + i} violates the profile constraints")
    r = _rho_rows(v)
    # Rows within rounding distance of the threshold are decided exactly.
    near = np.flatnonzero(np.abs(r - threshold) <= 1e-12 * threshold)
    for i in near.tolist():
        r[i] = rho_general(v[i])
    j = int(np.argmax(r))
    return int(np.count_nonzero(r > threshold)), float(r[j]), start + j


def sweep_convex(
    K: int,
    n_samples: int,
    seed: int,
    threshold: float = NINE_EIGHTHS,
    workers: int | None = None,
) -> SweepResult:
    """Monte Carlo robustness sweep over random convex decreasing profiles.

    Sample ``i`` is ``sample_convex_decreasing(ConvexDecreasingSampler(K,
    derive_seeds(seed, i)))``, so the worst profile can be regenerated on
    its own and the totals do not depend on ``workers``.
    """
    if int(n_samples) != n_samples or n_samples < 1:
        raise InvalidArgument(f"n_samples must be a positive integer, got {n_samples}")
    ConvexDecreasingSampler(K, seed)  # validates K and seed
    K, n_samples, seed = int(K), int(n_samples), int(seed)
    bounds = [(s, min(s + CHUNK, n_samples)) for s in range(0, n_samples, CHUNK)]
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(bounds) == 1:
        parts = [_sweep_chunk(K, seed, a, b, threshold) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: _sweep_chunk(K, seed, ab[0], ab[1], threshold), bounds))

    count = sum(p[0] for p in parts)
    # Highest rho wins; ties go to the lowest sample index.
    _, worst_idx = min(((-p[1], p[2]) for p in parts))
    worst_seed = int(streams.derive_seeds(seed, np.array([worst_idx], dtype=np.uint64))[0])
    worst = sample_convex_decreasing(ConvexDecreasingSampler(K, worst_seed))
    return SweepResult(
        K=K,
        count_total=n_samples,
        count_exceeding=count,
        worst_rho=rho_general(worst),
        worst_index=worst_idx,
        worst_profile=worst,
        seed=seed,
        threshold=threshold,
    )
