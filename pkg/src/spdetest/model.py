"""Experiment parameters and derived spectral quantities.

The observed system is a bundle of N Fourier modes, each an
Ornstein-Uhlenbeck process

    du_k = -theta * lam_k^(2*beta) * u_k dt + sigma * lam_k^(-gamma) dw_k,

where lam_k are the square roots of (minus) the Laplacian eigenvalues of the
spatial domain.  Every test statistic and threshold in this package depends
on the domain only through the eigenvalue list and the spectral weight

    M = sum_{k<=N} lam_k^(2*beta),

so general domains are abstracted to a user-supplied eigenvalue list.  The
built-in default is the power-law basis lam_k = k^(1/d), which for d = 1
(unit interval scaled to [0, pi]) gives lam_k = k exactly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "ParameterError",
    "Hypotheses",
    "TestLevel",
    "TimeGrid",
    "ModelParams",
    "build_model",
    "model_to_config",
    "model_from_config",
]


class ParameterError(ValueError):
    """Raised when a parameter violates its documented range."""


@dataclass(frozen=True)
class Hypotheses:
    """The simple pair of drift values under test, 0 < theta0 < theta1."""

    theta0: float
    theta1: float

    def __post_init__(self):
        if not (0.0 < self.theta0 < self.theta1):
            raise ParameterError(
                f"need 0 < theta0 < theta1, got theta0={self.theta0}, theta1={self.theta1}"
            )

    @property
    def diff(self) -> float:
        return self.theta1 - self.theta0

    @property
    def total(self) -> float:
        return self.theta1 + self.theta0

    @property
    def sq_diff(self) -> float:
        """theta1**2 - theta0**2."""
        return self.theta1**2 - self.theta0**2

    def theta(self, j: int) -> float:
        """Drift under hypothesis index j (0 = null, 1 = alternative)."""
        if j == 0:
            return self.theta0
        if j == 1:
            return self.theta1
        raise ParameterError(f"hypothesis index must be 0 or 1, got {j}")


@dataclass(frozen=True)
class TestLevel:
    """Significance level alpha and error-tolerance threshold rho."""

    __test__ = False  # not a pytest class, despite the name

    alpha: float
    rho: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.rho > 0.0:
            raise ParameterError(f"rho must be positive, got {self.rho}")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, T] with n steps of size dt = T/n."""

    T: float
    n: int
    dt: float = field(init=False)

    def __post_init__(self):
        if not self.T > 0.0:
            raise ParameterError(f"horizon T must be positive, got {self.T}")
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ParameterError(f"step count n must be a positive integer, got {self.n}")
        object.__setattr__(self, "dt", self.T / self.n)

    @classmethod
    def from_dt(cls, T: float, dt_max: float) -> "TimeGrid":
        """Grid with the smallest n such that dt <= dt_max."""
        if not dt_max > 0.0:
            raise ParameterError(f"dt_max must be positive, got {dt_max}")
        return cls(T=T, n=max(1, math.ceil(T / dt_max - 1e-12)))


def _power_eigenvalues(N: int, d: int) -> np.ndarray:
    k = np.arange(1, N + 1, dtype=np.float64)
    if d == 1:
        return k
    return k ** (1.0 / d)


@dataclass(frozen=True)
class ModelParams:
    """Immutable spectral model; safe to share across concurrent workers."""

    beta: float
    gamma: float
    sigma: float
    d: int
    eigenvalues: np.ndarray
    N: int
    u0: np.ndarray
    M: float
    basis: str

    def weight_drift(self) -> np.ndarray:
        """lam_k^(2*beta): per-mode drift rates divided by theta."""
        return self.eigenvalues ** (2.0 * self.beta)

    def weight_noise(self) -> np.ndarray:
        """sigma * lam_k^(-gamma): per-mode noise amplitudes."""
        return self.sigma * self.eigenvalues ** (-self.gamma)

    def weight_energy(self) -> np.ndarray:
        """lam_k^(2*beta + 2*gamma): weights for the terminal energy and u-du sums."""
        return self.eigenvalues ** (2.0 * self.beta + 2.0 * self.gamma)

    def weight_cross(self) -> np.ndarray:
        """lam_k^(2*beta + gamma): weights for the noise cross term."""
        return self.eigenvalues ** (2.0 * self.beta + self.gamma)

    def weight_quad(self) -> np.ndarray:
        """lam_k^(4*beta + 2*gamma): weights for the time-integrated energy."""
        return self.eigenvalues ** (4.0 * self.beta + 2.0 * self.gamma)


def build_model(
    beta: float = 1.0,
    gamma: float = 0.0,
    sigma: float = 1.0,
    d: int = 1,
    N: int = 1,
    eigenvalue_source: str | Sequence[float] = "power",
    u0: Sequence[float] | None = None,
) -> ModelParams:
    """Assemble and validate a spectral model.

    ``eigenvalue_source`` is either the string ``"power"`` (default basis
    lam_k = k^(1/d); exactly lam_k = k when d = 1) or an explicit ascending
    sequence of positive eigenvalues of length N.  The spectral weight M is
    accumulated with exactly rounded (compensated) summation so it is
    reproducible bit-for-bit from the eigenvalue list.
    """
    if not beta > 0.0:
        raise ParameterError(f"beta must be positive, got {beta}")
    if gamma < 0.0:
        raise ParameterError(f"gamma must be non-negative, got {gamma}")
    if not sigma > 0.0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    if not (isinstance(d, (int, np.integer)) and d >= 1):
        raise ParameterError(f"dimension d must be a positive integer, got {d}")
    if not (isinstance(N, (int, np.integer)) and N >= 1):
        raise ParameterError(f"mode count N must be a positive integer, got {N}")

    if isinstance(eigenvalue_source, str):
        if eigenvalue_source != "power":
            raise ParameterError(f"unknown eigenvalue source {eigenvalue_source!r}")
        lam = _power_eigenvalues(int(N), int(d))
        basis = "power"
    else:
        lam = np.asarray(eigenvalue_source, dtype=np.float64).copy()
        if lam.ndim != 1 or lam.size != N:
            raise ParameterError(f"need {N} eigenvalues, got shape {lam.shape}")
        if not np.all(lam > 0.0):
            raise ParameterError("eigenvalues must be strictly positive")
        if np.any(np.diff(lam) < 0.0):
            raise ParameterError("eigenvalues must be non-decreasing")
        basis = "explicit"
    lam.flags.writeable = False

    if u0 is None:
        u0_arr = np.zeros(int(N))
    else:
        u0_arr = np.asarray(u0, dtype=np.float64).copy()
        if u0_arr.shape != (N,):
            raise ParameterError(f"u0 must have length {N}, got shape {u0_arr.shape}")
        if np.any(u0_arr != 0.0):
            # The test statistics are derived for a zero initial state.
            warnings.warn(
                "nonzero initial Fourier values: the route-A statistic is unavailable",
                stacklevel=2,
            )
    u0_arr.flags.writeable = False

    M = math.fsum(lam ** (2.0 * beta))
    return ModelParams(
        beta=float(beta),
        gamma=float(gamma),
        sigma=float(sigma),
        d=int(d),
        eigenvalues=lam,
        N=int(N),
        u0=u0_arr,
        M=M,
        basis=basis,
    )


def model_to_config(model: ModelParams) -> dict:
    """Flat key/value form of a model.

    Schema: beta, gamma, sigma, d, N, basis ("power" | "explicit"),
    eigenvalues (list, present only for explicit basis), u0 (list).
    """
    cfg = {
        "beta": model.beta,
        "gamma": model.gamma,
        "sigma": model.sigma,
        "d": model.d,
        "N": model.N,
        "basis": model.basis,
        "u0": model.u0.tolist(),
    }
    if model.basis == "explicit":
        cfg["eigenvalues"] = model.eigenvalues.tolist()
    return cfg


def model_from_config(cfg: dict) -> ModelParams:
    """Rebuild a model from its flat config; eigenvalues and M are bit-exact."""
    source = cfg["eigenvalues"] if cfg.get("basis") == "explicit" else "power"
    return build_model(
        beta=cfg["beta"],
        gamma=cfg["gamma"],
        sigma=cfg["sigma"],
        d=cfg["d"],
        N=cfg["N"],
        eigenvalue_source=source,
        u0=cfg.get("u0"),
    )
