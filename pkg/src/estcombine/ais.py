"""A small one-dimensional adaptive importance sampler.

Stage ``k`` draws ``n`` fresh points from ``q(.; theta_k)``, reports the
ordinary importance sampling mean of ``f p / q`` and the variance of that
mean, then picks ``theta_{k+1}`` by a cross-entropy step over the points
seen so far. Stage estimates are conditionally unbiased given the past, so
they are uncorrelated and can be pooled with any fixed weights.

Two synthetic problems with known answers are packaged:

* ``light_tailed()``: ``f(x) = x**2`` under ``N(0, 1)``, mean 1;
* ``rare_event(t)``: ``f(x) = 1{x > t}`` under ``N(0, 1)``, mean ``Phi(-t)``.

Both use the normal location family ``q(.; theta) = N(theta, 1)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import streams
from .errors import DegenerateSample, InvalidArgument, SupportViolation
from .summation import accurate_sum
from .weights import SQRT_RULE, CombinedEstimate, Custom, StageEstimate, WeightRule, combine, make_weights

__all__ = [
    "Problem",
    "ProposalFamily",
    "AdaptiveRun",
    "ReplicationSet",
    "BiasDemo",
    "light_tailed",
    "rare_event",
    "constant_problem",
    "identity_problem",
    "gaussian_location",
    "normal_tail",
    "stage_estimate",
    "stage_estimate_self_normalized",
    "adapt_step",
    "run_adaptive",
    "replicate",
    "inverse_variance_weights",
    "estimated_weight_bias_demo",
    "self_normalized_floor_check",
]

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


def _std_normal_logpdf(x):
    return -0.5 * np.square(x) - _LOG_SQRT_2PI


def _square(x):
    return np.square(x)


def _exceeds(x, t):
    return (x > t).astype(float)


def _constant(x, c):
    return np.full(np.shape(x), float(c))


def _identity(x):
    return np.asarray(x, dtype=float)


def normal_tail(t: float) -> float:
    """P(Z > t) for a standard normal Z."""
    return 0.5 * math.erfc(t / math.sqrt(2))


@dataclass(frozen=True)
class Problem:
    """Estimate ``mu = E_p[f(x)]`` for a one-dimensional density ``p``."""

    name: str
    target_log_density: Callable
    integrand: Callable
    true_mean: float
    dimension: int = 1


def light_tailed() -> Problem:
    return Problem("x2", _std_normal_logpdf, _square, 1.0)


def rare_event(t: float = 3.0) -> Problem:
    return Problem(f"rare(t={t!r})", _std_normal_logpdf, partial(_exceeds, t=float(t)), normal_tail(t))


def constant_problem(c: float) -> Problem:
    return Problem(f"const({c!r})", _std_normal_logpdf, partial(_constant, c=float(c)), float(c))


def identity_problem() -> Problem:
    """``f(x) = x`` under ``N(0, 1)``: symmetric, mean 0."""
    return Problem("x", _std_normal_logpdf, _identity, 0.0)


def _gauss_loc_logpdf(x, theta, scale):
    z = (np.asarray(x) - theta[0]) / scale
    return -0.5 * z * z - _LOG_SQRT_2PI - math.log(scale)


def _gauss_loc_sample(theta, rng, n, scale):
    return theta[0] + scale * rng.standard_normal(n)


@dataclass(frozen=True)
class ProposalFamily:
    """A parametric proposal ``q(.; theta)`` with sampler and log density.

    ``log_density(x, theta)`` and ``sampler(theta, rng, n)`` take ``theta``
    as a tuple of floats. Packaged families have full support on the real
    line, which covers the support of every ``f p``. With
    ``adaptive=False`` the parameter stays at ``initial`` for every stage.
    """

    name: str
    initial: tuple
    log_density: Callable
    sampler: Callable
    adaptive: bool = True


def gaussian_location(theta0: float = 0.0, scale: float = 1.0, adaptive: bool = True) -> ProposalFamily:
    if not scale > 0:
        raise InvalidArgument(f"scale must be positive, got {scale}")
    return ProposalFamily(
        f"normal-location(scale={scale!r})",
        (float(theta0),),
        partial(_gauss_loc_logpdf, scale=float(scale)),
        partial(_gauss_loc_sample, scale=float(scale)),
        adaptive,
    )


class _Draw(NamedTuple):
    x: np.ndarray
    f: np.ndarray
    log_w: np.ndarray  # log p - log q
    u: np.ndarray  # f p / q


def _draw(problem: Problem, family: ProposalFamily, theta, n: int, rng) -> _Draw:
    theta = tuple(float(t) for t in theta)
    x = family.sampler(theta, rng, n)
    f = np.asarray(problem.integrand(x), dtype=float)
    log_p = np.asarray(problem.target_log_density(x), dtype=float)
    log_q = np.asarray(family.log_density(x, theta), dtype=float)
    live = (f != 0) & (log_p > -np.inf)
    if np.any(live & ~(log_q > -np.inf)):
        raise SupportViolation("proposal density is zero where f * p is nonzero")
    log_w = np.where(log_q > -np.inf, log_p - log_q, -np.inf)
    u = np.zeros(n)
    u[live] = f[live] * np.exp(log_w[live])
    return _Draw(x, f, log_w, u)


def _check_n(n) -> int:
    if int(n) != n or n < 2:
        raise InvalidArgument(f"n must be an integer >= 2, got {n}")
    return int(n)


def _mean_and_var_of_mean(u: np.ndarray) -> tuple[float, float]:
    if np.all(u == u[0]):
        return float(u[0]), 0.0
    n = u.size
    mu = float(np.sum(u)) / n
    return mu, float(np.sum(np.square(u - mu))) / (n - 1) / n


def stage_estimate(problem: Problem, family: ProposalFamily, theta, n: int, rng) -> StageEstimate:
    """Ordinary importance sampling estimate from ``n`` draws of ``q(.; theta)``.

    ``var_hat`` is the sample variance of ``f p / q`` divided by ``n``.
    """
    n = _check_n(n)
    mu, var = _mean_and_var_of_mean(_draw(problem, family, theta, n, rng).u)
    return StageEstimate(mu, var, n)


def stage_estimate_self_normalized(problem: Problem, family: ProposalFamily, theta, n: int, rng) -> StageEstimate:
    """Self-normalized estimate ``sum(w f) / sum(w)`` with ``w = p / q``.

    The variance is the delta-method estimate ``sum(wbar**2 (f - mu)**2)``.
    The result carries ``unbiased=False``: the ratio has O(1/n) bias.
    """
    n = _check_n(n)
    d = _draw(problem, family, theta, n, rng)
    if not np.any(d.log_w > -np.inf):
        raise DegenerateSample("all importance weights are zero")
    w = np.exp(d.log_w - d.log_w.max())
    wbar = w / accurate_sum(w)
    f0 = d.f[0]
    # Centering on f0 makes a constant integrand come back exactly.
    mu = f0 + accurate_sum(wbar * (d.f - f0))
    var = accurate_sum(np.square(wbar) * np.square(d.f - mu))
    return StageEstimate(float(mu), float(var), n, unbiased=False)


def adapt_step(problem: Problem, family: ProposalFamily, history: Sequence[tuple], theta) -> tuple:
    """Cross-entropy update of a normal location parameter.

    ``history`` holds ``(x, u)`` pairs, one per completed stage, where ``u``
    is ``f p / q`` evaluated under that stage's own proposal. The new
    location is the ``u``-weighted mean of all points; if every ``u`` is
    zero (for instance a rare event that has not been hit yet) the current
    ``theta`` is kept.
    """
    if len(history) == 0:
        raise InvalidArgument("adapt_step needs at least one completed stage")
    x = np.concatenate([np.asarray(h[0], dtype=float) for h in history])
    u = np.concatenate([np.asarray(h[1], dtype=float) for h in history])
    total = float(np.sum(u))
    if total == 0.0 or not math.isfinite(total):
        return tuple(float(t) for t in theta)
    return (float(np.sum(u * x)) / total,)


@dataclass(frozen=True)
class AdaptiveRun:
    problem: str
    stages: tuple
    thetas: tuple
    n: int
    K: int
    seed: int

    @property
    def N(self) -> int:
        return self.n * self.K

    def combine(self, rule: WeightRule) -> CombinedEstimate:
        return combine(self.stages, rule)

    def to_json(self, rule: WeightRule | None = None, rule_name: str | None = None) -> dict:
        out = {
            "problem": self.problem,
            "K": self.K,
            "n": self.n,
            "seed": self.seed,
            "stages": [
                {"k": k, "theta": list(th), "mu_hat": s.mu_hat, "var_hat": s.var_hat}
                for k, (s, th) in enumerate(zip(self.stages, self.thetas), start=1)
            ],
        }
        if rule is not None:
            c = self.combine(rule)
            out["combined"] = {"rule": rule_name or repr(rule), "mu_hat": c.mu_hat, "var_hat": c.var_hat}
        return out


def run_adaptive(
    problem: Problem,
    family: ProposalFamily,
    K: int,
    n: int,
    seed: int,
    use_history: bool = True,
) -> AdaptiveRun:
    """Run ``K`` sequential stages of ``n`` draws each.

    Randomness comes from a PCG64 generator seeded with ``seed``. With
    ``use_history=False`` each update only looks at the latest stage.
    """
    if int(K) != K or K < 1:
        raise InvalidArgument(f"K must be a positive integer, got {K}")
    n = _check_n(n)
    seed = streams.check_seed(seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    theta = tuple(family.initial)
    stages, thetas, history = [], [], []
    for _ in range(int(K)):
        d = _draw(problem, family, theta, n, rng)
        mu, var = _mean_and_var_of_mean(d.u)
        stages.append(StageEstimate(mu, var, n))
        thetas.append(theta)
        history.append((d.x, d.u))
        if family.adaptive:
            theta = adapt_step(problem, family, history if use_history else history[-1:], theta)
    return AdaptiveRun(problem.name, tuple(stages), tuple(thetas), n, int(K), seed)


@dataclass(frozen=True)
class ReplicationSet:
    """Stage estimates from independent replications, shape ``(R, K)``."""

    mu: np.ndarray
    var: np.ndarray
    true_mean: float
    seed: int

    @property
    def R(self) -> int:
        return self.mu.shape[0]

    def pooled(self, rule: WeightRule | str) -> tuple[np.ndarray, np.ndarray]:
        """Combined estimates and variance estimates, one per replication."""
        if rule == "invvar":
            w = np.vstack([inverse_variance_weights(v) for v in self.var])
        else:
            w = np.broadcast_to(make_weights(rule, self.mu.shape[1]), self.mu.shape)
        m0 = self.mu[:, :1]
        return (m0[:, 0] + np.sum(w * (self.mu - m0), axis=1), np.sum(w * w * self.var, axis=1))


# Replications per work unit; fixed so results ignore the worker count.
_REP_CHUNK = 256


def _replicate_chunk(problem, family, K, n, seeds, use_history):
    mu = np.empty((len(seeds), K))
    var = np.empty((len(seeds), K))
    for i, s in enumerate(seeds):
        run = run_adaptive(problem, family, K, n, s, use_history)
        mu[i] = [st.mu_hat for st in run.stages]
        var[i] = [st.var_hat for st in run.stages]
    return mu, var


def replicate(
    problem: Problem,
    family: ProposalFamily,
    K: int,
    n: int,
    R: int,
    seed: int,
    workers: int = 1,
    use_history: bool = True,
) -> ReplicationSet:
    """``R`` independent adaptive runs.

    Replication ``r`` is ``run_adaptive(..., seed=derive_seeds(seed, r))``.
    """
    if int(R) != R or R < 1:
        raise InvalidArgument(f"R must be a positive integer, got {R}")
    seeds = [int(s) for s in streams.derive_seeds(seed, np.arange(int(R), dtype=np.uint64))]
    chunks = [seeds[i : i + _REP_CHUNK] for i in range(0, len(seeds), _REP_CHUNK)]
    job = partial(_replicate_chunk, problem, family, int(K), int(n), use_history=use_history)
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, chunks))
    else:
        parts = [job(c) for c in chunks]
    return ReplicationSet(
        np.vstack([p[0] for p in parts]), np.vstack([p[1] for p in parts]), problem.true_mean, int(seed)
    )


def inverse_variance_weights(var_hats) -> np.ndarray:
    """Weights proportional to ``1 / var_hat``: the plug-in rule, kept as a foil.

    A stage with ``var_hat == 0`` gets the largest finite weight among the
    other stages; if every stage has zero variance the weights are uniform.
    """
    v = np.asarray(var_hats, dtype=float)
    pos = v > 0
    if not np.any(pos):
        return np.full(v.size, 1.0 / v.size)
    raw = np.empty(v.size)
    raw[pos] = 1.0 / v[pos]
    raw[~pos] = raw[pos].max()
    return raw / accurate_sum(raw)


def inverse_variance_rule(stages: Sequence[StageEstimate]) -> Custom:
    return Custom(inverse_variance_weights([s.var_hat for s in stages]))


class BiasDemo(NamedTuple):
    bias_estimated_weights: float
    se_estimated_weights: float
    bias_sqrt_rule: float
    se_sqrt_rule: float
    replications: int


def _bias(est: np.ndarray, mu: float) -> tuple[float, float]:
    err = est - mu
    if np.all(err == 0):
        return 0.0, 0.0
    return float(np.mean(err)), float(np.std(err, ddof=1) / math.sqrt(err.size))


def estimated_weight_bias_demo(
    problem: Problem,
    family: ProposalFamily,
    K: int,
    n: int,
    replications: int,
    seed: int,
    workers: int = 1,
) -> BiasDemo:
    """Empirical bias of plug-in inverse-variance weights vs the square root rule."""
    if replications < 100:
        raise InvalidArgument(f"need at least 100 replications, got {replications}")
    reps = replicate(problem, family, K, n, replications, seed, workers)
    b_inv, se_inv = _bias(reps.pooled("invvar")[0], problem.true_mean)
    b_sqrt, se_sqrt = _bias(reps.pooled(SQRT_RULE)[0], problem.true_mean)
    return BiasDemo(b_inv, se_inv, b_sqrt, se_sqrt, int(replications))


class FloorCheck(NamedTuple):
    scaled_mse: float
    floor: float
    replications: int


def self_normalized_floor_check(
    problem: Problem, family: ProposalFamily, theta, n: int, replications: int, seed: int
) -> FloorCheck:
    """Compare ``n * MSE`` of self-normalized estimates with ``4 eps^2 (1 - eps)^2``.

    Intended for indicator integrands with probability ``eps`` under ``p``;
    no self-normalized sampler can beat the floor as ``n`` grows.
    """
    eps = problem.true_mean
    seeds = streams.derive_seeds(seed, np.arange(int(replications), dtype=np.uint64))
    err = np.empty(int(replications))
    for i, s in enumerate(seeds.tolist()):
        rng = np.random.Generator(np.random.PCG64(int(s)))
        err[i] = stage_estimate_self_normalized(problem, family, theta, n, rng).mu_hat - eps
    return FloorCheck(n * float(np.mean(np.square(err))), 4 * eps**2 * (1 - eps) ** 2, int(replications))
