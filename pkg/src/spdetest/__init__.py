"""Calibrated likelihood-ratio drift tests for spectrally observed SPDEs.

The package simulates the Fourier-mode bundle of a stochastic fractional
heat equation, evaluates the exact large-deviation machinery of its
log-likelihood ratio, calibrates rejection thresholds so the dominant error
factor equals the significance level, computes minimal observation horizons
with guaranteed Type I / Type II bounds, and reproduces the reference
Monte Carlo error tables bit-deterministically.
"""

from .model import (
    Hypotheses,
    ModelParams,
    ParameterError,
    TestLevel,
    TimeGrid,
    build_model,
    model_from_config,
    model_to_config,
)
from .montecarlo import (
    ErrorEstimate,
    ExperimentSpec,
    estimate_error,
    reproduce_table,
    trial_rng,
    wilson_interval,
)
from .sim import (
    StabilityError,
    TrialStats,
    decide,
    log_lr,
    mle,
    simulate_trial,
    simulate_trial_from_noise,
    statistic,
)
from .sld import (
    DomainError,
    GfComponents,
    TiltPoint,
    a_factor,
    admissible_level_range,
    gf_components,
    mgf_exponent,
    rate_function,
    residual_R,
    tilt_epsilon,
)
from .thresholds import (
    CalibratedLevel,
    HorizonRequirement,
    SharpThreshold,
    calibrated_level,
    eta_level,
    horizon_requirement,
    min_time,
    modes_condition,
    normal_quantile,
    sharp_threshold,
    type2_bound,
    zeta_level,
)

__version__ = "0.1.0"
