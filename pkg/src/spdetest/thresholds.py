"""Calibrated rejection levels, minimum-horizon formulas, and sharp thresholds.

The tests reject when lnL >= level * scale, where the scale is T (time
regime) or M (mode regime).  The calibrated level is the root of

    exp(-I_0(level) * scale) = alpha

chosen inside the admissible range, which makes the dominant factor of the
Type I error exactly alpha; the remaining factor is controlled by the
minimum-horizon conditions below.  Writing a = -ln(alpha)/scale and
w for the opposite weight (M in the time regime, T in the mode regime):

    level = -(theta1-theta0)^2 * w / (4*theta0) + delta,
    delta = (theta1^2-theta0^2)/(2*theta0^2) * theta0*w*a / (a + sqrt(theta0*w*a + a^2)).

The rationalized quotient for delta is algebraically equal to the direct
subtraction but avoids catastrophic cancellation when the scale is huge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import Hypotheses, ModelParams, ParameterError

__all__ = [
    "CalibratedLevel",
    "HorizonEntry",
    "HorizonRequirement",
    "ModeCondition",
    "Type2Bound",
    "SharpThreshold",
    "normal_quantile",
    "calibrated_level",
    "eta_level",
    "zeta_level",
    "min_time",
    "horizon_requirement",
    "modes_condition",
    "type2_bound",
    "sharp_threshold",
]


@dataclass(frozen=True)
class CalibratedLevel:
    """Rejection level and its positive offset from the left endpoint."""

    level: float
    delta: float
    regime: str  # "time" | "mode"


@dataclass(frozen=True)
class HorizonEntry:
    """Minimal scale for one error kind: three closed-form terms and their max."""

    kind: str
    terms: tuple[float, float, float]
    t_exact: float
    t_display: int


@dataclass(frozen=True)
class HorizonRequirement:
    type1: HorizonEntry
    type2: HorizonEntry


@dataclass(frozen=True)
class ModeCondition:
    """Truth values and slacks (LHS - RHS) of the two mode-count inequalities."""

    kind: str
    satisfied: bool
    weight_ok: bool
    weight_slack: float
    weight_rhs: float
    shape_ok: bool
    shape_slack: float
    shape_rhs: float
    diagnostic: str


@dataclass(frozen=True)
class Type2Bound:
    bound: float
    bare_exponential: float


@dataclass(frozen=True)
class SharpThreshold:
    alpha: float
    log_c_sharp: float
    statistic_threshold: float


# Rational initial guess for the normal quantile (relative error ~1e-9),
# polished by one Halley step against the erfc-based CDF.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _quantile_guess(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
        ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    )


def normal_quantile(p: float) -> float:
    """Standard normal inverse CDF, absolute error below 1e-9 on [1e-8, 1-1e-8]."""
    if not (0.0 < p < 1.0):
        raise ParameterError(f"quantile argument must lie in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -normal_quantile(1.0 - p)
    x = _quantile_guess(p)
    # Halley refinement: e = Phi(x) - p, Phi(x) = erfc(-x/sqrt(2))/2.
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def calibrated_level(
    alpha: float, scale: float, weight: float, hyp: Hypotheses, regime: str
) -> CalibratedLevel:
    """Level whose dominant Type I factor equals alpha at the given scale.

    Time regime: scale = T, weight = M.  Mode regime: scale = M, weight = T.
    """
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if not (scale > 0.0 and weight > 0.0):
        raise ParameterError("scale and weight must be positive")
    if regime not in ("time", "mode"):
        raise ParameterError(f"regime must be 'time' or 'mode', got {regime!r}")
    a = -math.log(alpha) / scale
    b = math.sqrt(hyp.theta0 * weight * a + a * a)
    delta = hyp.sq_diff / (2.0 * hyp.theta0**2) * (hyp.theta0 * weight * a) / (a + b)
    level = -hyp.diff**2 * weight / (4.0 * hyp.theta0) + delta
    return CalibratedLevel(level=level, delta=delta, regime=regime)


def eta_level(alpha: float, T: float, M: float, hyp: Hypotheses) -> CalibratedLevel:
    """Time-regime level: reject when lnL >= eta * T."""
    return calibrated_level(alpha, scale=T, weight=M, hyp=hyp, regime="time")


def zeta_level(alpha: float, T: float, M: float, hyp: Hypotheses) -> CalibratedLevel:
    """Mode-regime level: reject when lnL >= zeta * M."""
    return calibrated_level(alpha, scale=M, weight=T, hyp=hyp, regime="mode")


def _log_alpha(alpha: float) -> float:
    # alpha = 1 is allowed here: every horizon term degenerates to 0.
    if not (0.0 < alpha <= 1.0):
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    return math.log(alpha)


def min_time(
    alpha: float, rho: float, N: int, M: float, hyp: Hypotheses, kind: str = "type1"
) -> HorizonEntry:
    """Minimal horizon guaranteeing the chosen error bound in the time regime.

    Both kinds share the second and third terms; only the first differs.
    The exact real maximum is returned along with its nearest-integer display
    value, which is how the reference tables print it.
    """
    la = _log_alpha(alpha)
    if not rho > 0.0:
        raise ParameterError(f"rho must be positive, got {rho}")
    t0, diff, tot = hyp.theta0, hyp.diff, hyp.total
    if kind == "type1":
        first = -256.0 * t0 * la / (diff**2 * M)
    elif kind == "type2":
        first = -16.0 * (hyp.theta1**2 + 16.0 * t0**2) * la / (t0 * diff**2 * M)
    else:
        raise ParameterError(f"kind must be 'type1' or 'type2', got {kind!r}")
    second = -16.0 * la / (t0 * M)
    third = -16.0 * (1.0 + rho) ** 2 * t0 * diff**2 * (N + 1) ** 2 * la / (
        rho**2 * tot**4 * M
    )
    t_exact = max(first, second, third)
    return HorizonEntry(
        kind=kind,
        terms=(first, second, third),
        t_exact=t_exact,
        t_display=int(round(t_exact)),
    )


def horizon_requirement(
    alpha: float, rho: float, N: int, M: float, hyp: Hypotheses
) -> HorizonRequirement:
    return HorizonRequirement(
        type1=min_time(alpha, rho, N, M, hyp, "type1"),
        type2=min_time(alpha, rho, N, M, hyp, "type2"),
    )


def modes_condition(
    alpha: float,
    rho: float,
    N: int,
    T: float,
    model: ModelParams,
    hyp: Hypotheses,
    kind: str = "type1",
) -> ModeCondition:
    """Evaluate the two mode-regime inequalities for a fixed horizon T.

    An unsatisfiable configuration (for instance beta/d <= 1/2, where
    M/(N+1)^2 stays bounded) is reported as unsatisfied with a diagnostic,
    never raised.
    """
    la = _log_alpha(alpha)
    if not rho > 0.0:
        raise ParameterError(f"rho must be positive, got {rho}")
    if not T > 0.0:
        raise ParameterError(f"horizon T must be positive, got {T}")
    t0, diff, tot = hyp.theta0, hyp.diff, hyp.total
    if kind == "type1":
        ratio = 16.0 * t0**2 / diff**2
    elif kind == "type2":
        ratio = (hyp.theta1**2 + 16.0 * t0**2) / diff**2
    else:
        raise ParameterError(f"kind must be 'type1' or 'type2', got {kind!r}")
    M = model.M
    weight_rhs = -16.0 * la / (t0 * T) * max(ratio, 1.0)
    shape_rhs = -16.0 * (1.0 + rho) ** 2 * t0 * diff**2 * la / (rho**2 * tot**4 * T)
    shape_lhs = M / (N + 1) ** 2
    weight_ok = M >= weight_rhs
    shape_ok = shape_lhs >= shape_rhs
    if weight_ok and shape_ok:
        diag = "both inequalities satisfied"
    else:
        missing = []
        if not weight_ok:
            missing.append(f"spectral weight M={M:.6g} < required {weight_rhs:.6g}")
        if not shape_ok:
            missing.append(
                f"M/(N+1)^2={shape_lhs:.6g} < required {shape_rhs:.6g}"
                + (
                    "; M/(N+1)^2 is bounded for beta/d <= 1/2, so no N may satisfy this"
                    if model.beta / model.d <= 0.5
                    else ""
                )
            )
        diag = "; ".join(missing)
    return ModeCondition(
        kind=kind,
        satisfied=weight_ok and shape_ok,
        weight_ok=weight_ok,
        weight_slack=M - weight_rhs,
        weight_rhs=weight_rhs,
        shape_ok=shape_ok,
        shape_slack=shape_lhs - shape_rhs,
        shape_rhs=shape_rhs,
        diagnostic=diag,
    )


def type2_bound(T: float, M: float, hyp: Hypotheses, rho: float) -> Type2Bound:
    """Exponential Type II bound (1+rho) * exp(-(theta1-theta0)^2 M T / (16 theta0^2))."""
    if T < 0.0 or M <= 0.0:
        raise ParameterError("need T >= 0 and M > 0")
    bare = math.exp(-hyp.diff**2 * M * T / (16.0 * hyp.theta0**2))
    return Type2Bound(bound=(1.0 + rho) * bare, bare_exponential=bare)


def sharp_threshold(alpha: float, T: float, model: ModelParams, hyp: Hypotheses) -> SharpThreshold:
    """Thresholds of the quantile-based sharp test.

    ``log_c_sharp`` is the log-likelihood-ratio cutoff; ``statistic_threshold``
    is the equivalent cutoff -sigma * q_alpha * sqrt(M / (2 theta0)) for the
    centred statistic used by the simulation harness.
    """
    q = normal_quantile(alpha)
    t0 = hyp.theta0
    M = model.M
    log_c = -hyp.diff**2 * M * T / (4.0 * t0) - hyp.sq_diff / (2.0 * t0) * math.sqrt(
        M * T / (2.0 * t0)
    ) * q
    stat = -model.sigma * q * math.sqrt(M / (2.0 * t0))
    return SharpThreshold(alpha=alpha, log_c_sharp=log_c, statistic_threshold=stat)
