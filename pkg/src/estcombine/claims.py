"""Reproducible numeric claims, each evaluated into one or more report rows."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import ais, ineff, varmodels
from .weights import SQRT_RULE, make_weights


@dataclass(frozen=True)
class ReportRow:
    """One checked number.

    ``paper_value`` is either a float (pass iff within ``tolerance``) or a
    ``(lo, hi)`` interval (pass iff ``lo <= computed <= hi``).
    """

    claim_id: str
    paper_value: float | tuple
    computed_value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        c = self.computed_value
        if isinstance(self.paper_value, tuple):
            lo, hi = self.paper_value
            return bool(lo <= c <= hi)
        return bool(abs(c - self.paper_value) <= self.tolerance)

    def to_json(self) -> dict:
        pv = self.paper_value
        if isinstance(pv, tuple):
            # Open ends are written as null.
            pv = [None if math.isinf(b) else b for b in pv]
        return {
            "claim_id": self.claim_id,
            "paper_value": pv,
            "computed_value": self.computed_value,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class Settings:
    seed: int = 42
    samples: int = 10**6
    workers: int = 1


def _ninebyeight(cfg):
    curve = ineff.rho_curve(0.5, 1.0, 10**4)
    curve0 = ineff.rho_curve(0.5, 0.0, 10**4)
    cap = max(float(curve.max()), float(curve0.max()))
    return [
        ReportRow("ninebyeight.cap", (1.0, 9 / 8 + 1e-12), cap, 0.0),
        ReportRow("ninebyeight.limit", (1.1240, 1.1250), ineff.rho(0.5, 1.0, 10**6), 0.0),
        ReportRow("ninebyeight.asymptote", 9 / 8, ineff.asymptotic_ineff(ineff.RateBounds(0, 1)), 0.0),
    ]


def _minimax(cfg):
    grid = np.arange(21) / 20
    worst = max(abs(ineff.minimax_scan(K, grid).best_x - 0.5) for K in (2, 5, 10, 100))
    return [ReportRow("minimax", 0.0, worst, 0.0)]


def _monotone(cfg):
    ratios = ineff.halfrule_ratios(10**4)
    return [
        ReportRow("monotone.min_ratio", (math.nextafter(1.0, 2.0), math.inf), float(ratios.min()), 0.0),
        ReportRow("monotone.small_K", (1.0038, math.inf), float(ratios[:7].min()), 0.0),
    ]


def _sandwich(cfg):
    bad = 0
    for x in (np.arange(11) / 10).tolist():
        sums = ineff.power_sum_prefix(x, 1000)
        for K in range(1, 1001):
            lo, hi = ineff.integral_bounds(x, K)
            s = sums[K - 1]
            ok = lo <= s <= hi
            if 0 < x < 1:
                ok = ok and lo < s and s < hi
            elif x == 1:
                ok = ok and s < hi
            bad += not ok
    return [ReportRow("sandwich", 0.0, float(bad), 0.0)]


def _plateau104(cfg):
    v = 1.0 / np.minimum(np.arange(1, 11), 6)
    return [ReportRow("plateau104", (1.035, 1.040), ineff.rho_general(v), 0.0)]


def _plateau1121(cfg):
    return [ReportRow("plateau1121", (1.0, 1.1215), varmodels.sweep_plateau(100, 100).max_rho, 0.0)]


def _transient637(cfg):
    prof = varmodels.profile_transient(3, 1.0, 10, 0.01)
    return [ReportRow("transient637", (6.33, 6.40), ineff.rho_general(prof), 0.0)]


def _scramblednet43(cfg):
    return [ReportRow("scramblednet43", 4 / 3, ineff.asymptotic_ineff(ineff.RateBounds(0, 2)), 0.0)]


def _gammalog2(cfg):
    return [ReportRow("gammalog2", 2.0, ineff.gamma_last_iterate_limit(math.log(2), 10).bound, 1e-12)]


def _gammalog10(cfg):
    return [ReportRow("gammalog10", 10 / 9, ineff.gamma_last_iterate_limit(math.log(10), 10).bound, 1e-12)]


def _gammabrute(cfg):
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(100):
        x, y = rng.uniform(0.01, 3.0, size=2)
        K = int(rng.integers(1, 51))
        ref = ineff.gamma_brute_force(x, y, K)
        worst = max(worst, abs(ineff.gamma(x, y, K) - ref) / ref)
    return [ReportRow("gammabrute", 0.0, worst, 1e-10)]


def _oracle(cfg):
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(1000):
        K = int(rng.integers(1, 31))
        v = rng.uniform(0.01, 1.0, size=K)
        a = ineff.rho_custom(v, make_weights(SQRT_RULE, K))
        worst = max(worst, abs(a - ineff.rho_general(v)) / a)
    for y in np.linspace(0, 1, 11).tolist():
        for K in (1, 2, 7, 30, 200):
            a = ineff.rho(0.5, y, K)
            worst = max(worst, abs(ineff.rho_general(varmodels.profile_power_law(y, K)) - a) / a)
    return [ReportRow("oracle", 0.0, worst, 1e-12)]


_CONVEX_TARGETS = {
    5: ((2, 100), (1.10, 1.20)),
    10: ((1000, 3500), (1.22, 1.37)),
    20: ((20, 400), (1.19, 1.33)),
}


def _convex(K):
    def run(cfg):
        res = varmodels.sweep_convex(K, cfg.samples, cfg.seed, workers=cfg.workers)
        count_iv, worst_iv = _CONVEX_TARGETS[K]
        return [
            ReportRow(f"convexK{K}.count", tuple(map(float, count_iv)), float(res.count_exceeding), 0.0),
            ReportRow(f"convexK{K}.worst", worst_iv, res.worst_rho, 0.0),
        ]

    return run


_ais_cache: dict = {}


def _light_reps(cfg):
    key = (cfg.seed, cfg.workers)
    if key not in _ais_cache:
        _ais_cache.clear()
        _ais_cache[key] = ais.replicate(
            ais.light_tailed(), ais.gaussian_location(), 5, 200, 10**5, cfg.seed, workers=cfg.workers
        )
    return _ais_cache[key]


def _aisunbiased(cfg):
    reps = _light_reps(cfg)
    est = reps.pooled(SQRT_RULE)[0][: 10**4]
    se = float(np.std(est, ddof=1) / math.sqrt(est.size))
    return [ReportRow("aisunbiased", 1.0, float(np.mean(est)), 4 * se)]


def _aiscorr(cfg):
    mu = _light_reps(cfg).mu[: 10**4]
    c = np.corrcoef(mu.T)
    off = np.abs(c[np.triu_indices_from(c, k=1)])
    return [ReportRow("aiscorr", 0.0, float(off.max()), 4 / math.sqrt(mu.shape[0]))]


def _aisvarhat(cfg):
    est, var = _light_reps(cfg).pooled(SQRT_RULE)
    emp = float(np.var(est, ddof=1))
    return [ReportRow("aisvarhat", emp, float(np.mean(var)), 0.05 * emp)]


def _biasdemo(cfg):
    d = ais.estimated_weight_bias_demo(
        ais.rare_event(3.0), ais.gaussian_location(), 10, 50, 10**4, cfg.seed, workers=cfg.workers
    )
    return [
        ReportRow("biasdemo.invvar_z", (-math.inf, -4.0), d.bias_estimated_weights / d.se_estimated_weights, 0.0),
        ReportRow("biasdemo.sqrt", 0.0, d.bias_sqrt_rule, 4 * d.se_sqrt_rule),
    ]


CLAIMS: dict[str, Callable[[Settings], list]] = {
    "ninebyeight": _ninebyeight,
    "minimax": _minimax,
    "monotone": _monotone,
    "sandwich": _sandwich,
    "plateau104": _plateau104,
    "plateau1121": _plateau1121,
    "transient637": _transient637,
    "scramblednet43": _scramblednet43,
    "gammalog2": _gammalog2,
    "gammalog10": _gammalog10,
    "gammabrute": _gammabrute,
    "oracle": _oracle,
    "convexK5": _convex(5),
    "convexK10": _convex(10),
    "convexK20": _convex(20),
    "aisunbiased": _aisunbiased,
    "aiscorr": _aiscorr,
    "aisvarhat": _aisvarhat,
    "biasdemo": _biasdemo,
}


def evaluate(claim_ids, cfg: Settings) -> list[ReportRow]:
    rows = []
    for cid in claim_ids:
        rows.extend(CLAIMS[cid](cfg))
    _ais_cache.clear()
    return rows
