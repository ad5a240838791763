"""Counter-based uniform streams for reproducible, partition-free sampling.

Every draw is a pure function of ``(seed, counter)``: the SplitMix64 output
function (Steele, Lea & Flood 2014) applied to ``seed + (counter + 1) *
0x9E3779B97F4A7C15`` mod 2**64. Because no generator state is carried from
one draw to the next, a sweep can be split across any number of workers
and still reproduce the same numbers bit for bit.

Sample ``i`` of a sweep with master seed ``s`` uses the derived seed
``derive_seeds(s, i)``, which is itself the ``i``-th SplitMix64 output of
``s``; its ``j``-th uniform is ``uniforms(derived, j)``.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgument

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 2.0**-53

MAX_SEED = 2**64 - 1


def check_seed(seed) -> int:
    if int(seed) != seed or not 0 <= seed <= MAX_SEED:
        raise InvalidArgument(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def splitmix64(seeds, counters) -> np.ndarray:
    """Raw 64-bit outputs for broadcast ``seeds`` and ``counters``."""
    s = np.asarray(seeds, dtype=np.uint64)
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix(s + (c + np.uint64(1)) * _GOLDEN)


def derive_seeds(master: int, indices) -> np.ndarray:
    """Per-sample seeds for the given sample indices."""
    return splitmix64(np.uint64(check_seed(master)), indices)


def uniforms(seeds, n: int) -> np.ndarray:
    """Uniforms on [0, 1): shape ``seeds.shape + (n,)``, 53 random bits each."""
    s = np.asarray(seeds, dtype=np.uint64)[..., None]
    bits = splitmix64(s, np.arange(n, dtype=np.uint64))
    return (bits >> np.uint64(11)).astype(np.float64) * _TWO_M53
