"""Generating-function components, tilt parameters, and rate functions.

The log-likelihood ratio lnL between the two drift hypotheses has an exact
cumulant generating function that splits into a leading term proportional to
the scale weight (M in the time regime, T in the mode regime), a
constant-order term per mode, and a residual that vanishes exponentially:

    (1/T) ln E_j[exp(eps * lnL)] = M*L_j(eps) + (N*H_j(eps) + R_j(eps)) / T
    (1/M) ln E_j[exp(eps * lnL)] = T*L_j(eps) + (N*H_j(eps) + R_j(eps)) / M

with, writing th_j for the drift under hypothesis j and
s = th_j^2 + (theta1^2 - theta0^2)*eps,

    L_j(eps) = (th_j + (theta1 - theta0)*eps - sqrt(s)) / 2
    D_j(eps) = (th_j + (theta1 - theta0)*eps) / sqrt(s)
    H_j(eps) = -log((1 + D_j) / 2) / 2
    R_j(eps) = -(1/2) * sum_k log(1 + (1-D_j)/(1+D_j) * exp(-2*lam_k^(2b)*T*sqrt(s)))

valid for eps > -th_j^2 / (theta1^2 - theta0^2).  Exponential tilting at the
point where w * L_j'(eps) equals a target level eta yields closed forms for
the tilt parameter, the Legendre-transform rate function I_j(eta), and the
computable tail factor A = exp(-I_j*scale) * exp(N*H_j + R_j) that dominates
the error probabilities.  The two regimes are mirror images, so a single
weight parameter w (M or T) serves both.

Domain violations raise :class:`DomainError` instead of returning NaN so
that Monte Carlo aggregates are never silently poisoned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import Hypotheses, ModelParams, ParameterError

__all__ = [
    "DomainError",
    "GfComponents",
    "TiltPoint",
    "gf_components",
    "residual_R",
    "mgf_exponent",
    "admissible_level_range",
    "tilt_epsilon",
    "rate_function",
    "a_factor",
]


class DomainError(ValueError):
    """An evaluation point left the admissible domain."""


@dataclass(frozen=True)
class GfComponents:
    """Leading (L), ratio (D), and constant-order (H) generating-function parts."""

    L: float
    D: float
    H: float


@dataclass(frozen=True)
class TiltPoint:
    """Exponential tilt parameter for one hypothesis index."""

    epsilon: float
    hypothesis_index: int


def _sqrt_arg(epsilon: float, j: int, hyp: Hypotheses) -> float:
    th = hyp.theta(j)
    s = th * th + hyp.sq_diff * epsilon
    if s <= 0.0:
        raise DomainError(
            f"epsilon={epsilon} at or below the domain boundary for hypothesis {j} "
            f"(need epsilon > {-th * th / hyp.sq_diff})"
        )
    return s


def gf_components(epsilon: float, j: int, hyp: Hypotheses) -> GfComponents:
    """Evaluate L_j, D_j, H_j at a tilt value epsilon."""
    s = _sqrt_arg(epsilon, j, hyp)
    r = math.sqrt(s)
    lead = hyp.theta(j) + hyp.diff * epsilon
    L = 0.5 * (lead - r)
    D = lead / r
    H = -0.5 * math.log(0.5 * (1.0 + D))
    return GfComponents(L=L, D=D, H=H)


def residual_R(epsilon: float, j: int, hyp: Hypotheses, model: ModelParams, T: float) -> float:
    """Mode sum R_j(eps); each term decays like exp(-2*lam_k^(2b)*T*sqrt(s))."""
    if not T > 0.0:
        raise ParameterError(f"horizon T must be positive, got {T}")
    s = _sqrt_arg(epsilon, j, hyp)
    r = math.sqrt(s)
    D = (hyp.theta(j) + hyp.diff * epsilon) / r
    q = (1.0 - D) / (1.0 + D)
    terms = []
    for lk in model.weight_drift():
        arg = q * math.exp(-2.0 * lk * T * r)
        if arg <= -1.0:
            raise DomainError(f"residual log argument {1.0 + arg} <= 0 at epsilon={epsilon}")
        terms.append(math.log1p(arg))
    return -0.5 * math.fsum(terms)


def mgf_exponent(
    epsilon: float,
    j: int,
    hyp: Hypotheses,
    model: ModelParams,
    T: float,
    scaling: str = "time",
) -> float:
    """Scaled log-MGF of lnL under hypothesis j.

    ``scaling="time"`` returns (1/T) ln E[exp(eps lnL)];
    ``scaling="mode"`` returns (1/M) ln E[exp(eps lnL)].
    """
    c = gf_components(epsilon, j, hyp)
    rem = model.N * c.H + residual_R(epsilon, j, hyp, model, T)
    if scaling == "time":
        return model.M * c.L + rem / T
    if scaling == "mode":
        return T * c.L + rem / model.M
    raise ParameterError(f"scaling must be 'time' or 'mode', got {scaling!r}")


def admissible_level_range(hyp: Hypotheses, weight: float) -> tuple[float, float]:
    """Open interval of levels eta for which the null-hypothesis tilt is defined.

    The left endpoint is where the rate function vanishes; the right endpoint
    is the singularity of the tilt formula.
    """
    return (-hyp.diff**2 * weight / (4.0 * hyp.theta0), 0.5 * hyp.diff * weight)


def _check_level(level: float, hyp: Hypotheses, weight: float) -> None:
    lo, hi = admissible_level_range(hyp, weight)
    # The left endpoint itself is admissible (it maps to tilt 0); the right
    # endpoint is a genuine singularity of the formulas.
    if not (lo <= level < hi):
        raise DomainError(f"level {level} outside admissible range [{lo}, {hi})")


def tilt_epsilon(level: float, j: int, hyp: Hypotheses, weight: float) -> TiltPoint:
    """Tilt parameter solving weight * L_j'(epsilon) = level.

    ``weight`` is M in the time regime and T in the mode regime.
    """
    _check_level(level, hyp, weight)
    th = hyp.theta(j)
    g = -2.0 * level + hyp.diff * weight
    num = hyp.sq_diff**2 * weight**2 - 4.0 * th * th * g * g
    return TiltPoint(epsilon=num / (4.0 * hyp.sq_diff * g * g), hypothesis_index=j)


def rate_function(level: float, j: int, hyp: Hypotheses, weight: float) -> float:
    """Large-deviation rate I_j at the given level (Legendre transform of w*L_j)."""
    _check_level(level, hyp, weight)
    th = hyp.theta(j)
    num = 4.0 * th * level + (-1.0) ** j * hyp.diff**2 * weight
    den = 8.0 * (2.0 * level - hyp.diff * weight) * hyp.sq_diff
    return -num * num / den


def a_factor(
    level: float,
    j: int,
    hyp: Hypotheses,
    model: ModelParams,
    T: float,
    scale: str = "time",
) -> float:
    """Computable tail factor exp(-I_j * s) * exp(N*H_j + R_j) at the tilt point.

    ``scale="time"`` uses weight M and multiplies the rate by T;
    ``scale="mode"`` uses weight T and multiplies the rate by M.
    """
    if scale == "time":
        weight, s = model.M, T
    elif scale == "mode":
        weight, s = T, model.M
    else:
        raise ParameterError(f"scale must be 'time' or 'mode', got {scale!r}")
    eps = tilt_epsilon(level, j, hyp, weight).epsilon
    rate = rate_function(level, j, hyp, weight)
    c = gf_components(eps, j, hyp)
    rem = model.N * c.H + residual_R(eps, j, hyp, model, T)
    return math.exp(-rate * s) * math.exp(rem)
