"""Pooling unbiased, uncorrelated estimates with deterministic weights.

The square root rule weights stage ``k`` of an adaptive importance sampler
proportionally to ``sqrt(k)``. This package evaluates how much variance
that and other fixed rules give up against the unknown optimal weighting,
and includes a small adaptive sampler for checking the theory by
simulation.
"""

from .errors import DegenerateSample, DegenerateWeights, EstCombineError, InvalidArgument, SupportViolation
from .ineff import (
    RateBounds,
    asymptotic_ineff,
    gamma,
    gamma_last_iterate_limit,
    integral_bounds,
    minimax_scan,
    power_sum,
    rho,
    rho_custom,
    rho_general,
    rho_halfrule_monotone_check,
    sup_rho_over_y,
)
from .varmodels import (
    ConvexDecreasingSampler,
    VarianceProfile,
    profile_plateau,
    profile_power_law,
    profile_transient,
    sample_convex_decreasing,
    sweep_convex,
    sweep_plateau,
)
from .weights import (
    SQRT_RULE,
    CombinedEstimate,
    Custom,
    Exponential,
    LastOnly,
    PowerLaw,
    StageEstimate,
    combine,
    make_weights,
)

__version__ = "0.1.0"
