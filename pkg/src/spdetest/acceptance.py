"""Executable acceptance criteria.

Each criterion returns a :class:`CriterionResult` with one-line details, so
the same checks back both the pytest gate and the ``spdetest check`` CLI.
Criteria 4-7 re-run reference experiment tables at their published trial
counts and are minutes-scale; the rest are instant to seconds.

Two table entries are known to be irreproducible at the stated tolerances:
the T=10 Type II entry of table 4 and the N=40 entry of table 5.  The exact
law of the log-likelihood ratio (characteristic-function inversion, see
tests/oracles.py) places the true probabilities at 0.7650 and 0.00949, both
outside the windows built around the printed reference values (0.7155 +- 0.03
and 0.017 +- 0.006).  Those criteria are implemented faithfully and fail
honestly; every neighbouring entry reproduces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import montecarlo as mc
from . import sim, sld, thresholds
from .model import Hypotheses, TestLevel, TimeGrid, build_model

__all__ = ["CriterionResult", "run_criteria", "CRITERIA", "QUICK"]

_HYP = Hypotheses(0.1, 0.2)
_LEVEL = TestLevel(0.05, 0.1)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: list[str]

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:2d} [{status}] {self.name}"


def _close(a: float, b: float, rel: float) -> bool:
    return a == b or abs(a - b) <= rel * max(abs(a), abs(b))


def criterion_1() -> CriterionResult:
    """Threshold exactness: minimal horizons reproduce {629, 818, 1258, 1447}."""
    printed = dict(zip((0.1, 0.05, 0.01, 0.005), (629, 818, 1258, 1447)))
    details, ok = [], True
    for alpha, want in printed.items():
        entry = thresholds.min_time(alpha, 0.1, 3, 14.0, _HYP, "type1")
        good = entry.t_display == want and abs(entry.t_exact - want) <= 0.5
        ok &= good
        details.append(f"alpha={alpha}: T_b1={entry.t_exact:.2f} -> {entry.t_display} (want {want})")
    return CriterionResult(1, "minimal-horizon table", ok, details)


def criterion_2() -> CriterionResult:
    """Calibration identities on a 100-point (alpha, T, M) grid at 1e-10 relative."""
    alphas = (0.5, 0.1, 0.05, 0.01, 0.005)
    Ts = (20.0, 100.0, 818.0, 3000.0, 10000.0)
    Ms = (1.0, 14.0, 385.0, 5000.0)
    model = build_model(N=3)
    worst = 0.0
    ok = True
    for alpha in alphas:
        for T in Ts:
            for M in Ms:
                eta = thresholds.eta_level(alpha, T, M, _HYP)
                zeta = thresholds.zeta_level(alpha, T, M, _HYP)
                a1 = math.exp(-sld.rate_function(eta.level, 0, _HYP, M) * T)
                a2 = math.exp(-sld.rate_function(zeta.level, 0, _HYP, T) * M)
                ok &= _close(a1, alpha, 1e-10) and _close(a2, alpha, 1e-10)
                worst = max(worst, abs(a1 - alpha) / alpha, abs(a2 - alpha) / alpha)
                e0 = sld.tilt_epsilon(eta.level, 0, _HYP, M).epsilon
                e1 = sld.tilt_epsilon(eta.level, 1, _HYP, M).epsilon
                ok &= abs(e1 - (e0 - 1.0)) <= 1e-10 * max(1.0, abs(e0))
                # constant-order and residual parts coincide across hypotheses
                g0, g1 = sld.gf_components(e0, 0, _HYP), sld.gf_components(e1, 1, _HYP)
                ok &= _close(g0.H, g1.H, 1e-10)
                r0 = sld.residual_R(e0, 0, _HYP, model, T)
                r1 = sld.residual_R(e1, 1, _HYP, model, T)
                ok &= _close(r0, r1, 1e-10)
    return CriterionResult(
        2, "calibration identities (100-point grid)", ok,
        [f"worst relative defect of exp(-I0 * scale) vs alpha: {worst:.2e}"],
    )


def criterion_3() -> CriterionResult:
    """Closed-form Type II bound row matches the printed values."""
    result = mc.reproduce_table(4, bound_only=True)
    failures = mc.check_rows(result)
    details = [
        f"T={r['col_key']}: {r['estimate']:.4g} vs printed {r['paper_value']:.2g}"
        for r in result.rows
    ] + failures
    return CriterionResult(3, "Type II exponential bound row", not failures, details)


def _table_rows(result: mc.TableResult, row_key: str) -> dict[str, dict]:
    return {r["col_key"]: r for r in result.rows if r["row_key"] == row_key}


def criterion_4(m=None, seed=None, workers=None) -> CriterionResult:
    """Step-size sweep: endpoint values within tolerance, decreasing trend."""
    result = mc.reproduce_table(1, m=m, base_seed=seed, workers=workers)
    rt0 = _table_rows(result, "RT0")
    sharp = _table_rows(result, "RTsharp")
    checks = [
        ("RT0 @ dt=1", rt0["1"]["estimate"], 0.0475, 0.015),
        ("RTsharp @ dt=1", sharp["1"]["estimate"], 0.0975, 0.015),
        ("RT0 @ dt=0.02", rt0["0.02"]["estimate"], 0.0088, 0.005),
        ("RTsharp @ dt=0.02", sharp["0.02"]["estimate"], 0.0385, 0.008),
    ]
    ok = True
    details = []
    for name, est, want, tol in checks:
        good = abs(est - want) <= tol
        ok &= good
        details.append(f"{name}: {est:.4f} vs {want:.4f} +- {tol} {'ok' if good else 'OUT'}")
    trend = (
        rt0["0.02"]["estimate"] < rt0["1"]["estimate"]
        and sharp["0.02"]["estimate"] < sharp["1"]["estimate"]
    )
    ok &= trend
    details.append(f"decreasing across sweep: {trend}")
    return CriterionResult(4, "table 1 step-size sweep", ok, details)


def criterion_5(m=None, seed=None, workers=None) -> CriterionResult:
    """Type I at the minimal horizon for each alpha."""
    result = mc.reproduce_table(2, m=m, base_seed=seed, workers=workers)
    failures = mc.check_rows(result)
    details = [
        f"alpha={r['col_key']}: {r['estimate']:.4f} vs {r['paper_value']:.4f} "
        f"+- {r['tol']:.4f}, bound {r['upper_bound']:.4f}"
        for r in result.rows
    ] + failures
    return CriterionResult(5, "table 2 Type I at minimal horizons", not failures, details)


def criterion_6(m=None, seed=None, workers=None) -> CriterionResult:
    """Type II against printed values at T in {10, 40, 60}."""
    result = mc.reproduce_table(4, m=m, base_seed=seed, workers=workers)
    rt0 = _table_rows(result, "RT0")
    tol = {"10": 0.03, "40": 0.01, "60": 0.002}
    ok = True
    details = []
    for key, t in tol.items():
        row = rt0[key]
        good = abs(row["estimate"] - row["paper_value"]) <= t
        ok &= good
        note = "" if good else " OUT (exact law gives 0.7650 at T=10; see ledger)"
        details.append(
            f"T={key}: {row['estimate']:.4f} vs {row['paper_value']:.4f} +- {t}{note}"
        )
    return CriterionResult(6, "table 4 Type II values", ok, details)


def criterion_7(m=None, seed=None, workers=None) -> CriterionResult:
    """Mode-regime Type I at N in {10, 40, 80}, T = 1."""
    m = mc.DEFAULT_TRIALS if m is None else m
    seed = mc.default_base_seed() if seed is None else seed
    printed = {10: 0.007, 40: 0.017, 80: 0.013}
    ok = True
    details = []
    for N, want in printed.items():
        model = build_model(N=N)
        dt = min(0.02, 0.1 / (_HYP.theta1 * float(model.weight_drift()[-1])))
        spec = mc.ExperimentSpec(
            model, TimeGrid.from_dt(1.0, dt), _HYP, _LEVEL, "RN0", "type1", m, seed
        )
        est = mc.estimate_error(spec, workers)
        tol = max(0.006, 4.0 * est.stderr)
        good = abs(est.p_hat - want) <= tol and est.p_hat <= 1.1 * _LEVEL.alpha
        ok &= good
        note = "" if good else " OUT (exact law gives 0.00949 at N=40; see ledger)"
        details.append(f"N={N}: {est.p_hat:.4f} vs {want:.4f} +- {tol:.4f}{note}")
    return CriterionResult(7, "table 5 mode-regime Type I values", ok, details)


def criterion_8(m=None, seed=None, workers=None) -> CriterionResult:
    """Monte Carlo moment of the likelihood ratio vs the exact generating function."""
    m = 100_000 if m is None else m
    seed = mc.default_base_seed() if seed is None else seed
    model = build_model(N=1)
    T = 5.0
    grid = TimeGrid(T, 1000)
    eps_values = (0.1, 0.3)
    sums = {e: [] for e in eps_values}
    for j in range(m):
        stats = sim.simulate_trial(model, grid, _HYP.theta0, mc.trial_rng(seed, j))
        lnl = sim.log_lr(stats, _HYP, model, grid, route="A")
        for e in eps_values:
            sums[e].append(math.exp(e * lnl))
    ok = True
    details = []
    for e in eps_values:
        vals = np.asarray(sums[e])
        mean = float(vals.mean())
        se = float(vals.std(ddof=1)) / math.sqrt(m)
        exact = math.exp(T * sld.mgf_exponent(e, 0, _HYP, model, T, "time"))
        good = abs(mean - exact) <= 1.96 * se
        ok &= good
        details.append(
            f"eps={e}: MC {mean:.6f} +- {se:.6f}, exact {exact:.6f}, "
            f"z={(mean - exact) / se:+.2f}"
        )
    return CriterionResult(8, "moment generating function cross-check", ok, details)


def criterion_9(seed=None) -> CriterionResult:
    """Identical estimate bytes for worker counts 1, 4, 16."""
    seed = mc.default_base_seed() if seed is None else seed
    model = build_model(N=3)
    spec = mc.ExperimentSpec(
        model, TimeGrid(10.0, 100), _HYP, _LEVEL, "RT0", "type1", 512, seed
    )
    blobs = [mc.estimate_error(spec, workers=w).canonical_bytes() for w in (1, 4, 16)]
    ok = blobs[0] == blobs[1] == blobs[2]
    return CriterionResult(
        9, "worker-count determinism", ok,
        [f"p_hat={mc.estimate_error(spec, workers=1).p_hat:.4f}, bytes equal: {ok}"],
    )


def criterion_10(seed=None) -> CriterionResult:
    """Simulator oracles: zero-noise MLE, discrete variance, route A/B gap halving."""
    seed = mc.default_base_seed() if seed is None else seed
    details = []
    ok = True

    # zero-noise paths with a nonzero start recover the drift exactly
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = build_model(N=3, u0=[0.7, -0.3, 1.1])
    grid = TimeGrid(5.0, 50)
    stats = sim.simulate_trial_from_noise(model, grid, 0.17, np.zeros((3, 50)))
    err = abs(sim.mle(stats) - 0.17) / 0.17
    good = err <= 1e-12
    ok &= good
    details.append(f"zero-noise MLE relative error {err:.2e}")

    # terminal variance vs the closed-form geometric sum (zero-mean estimator)
    model = build_model(N=1)
    n, m, theta, T = 10_000, 100_000, 0.1, 10.0
    grid = TimeGrid(T, n)
    xs = np.empty(m)
    for j in range(m):
        xs[j] = sim.simulate_trial(model, grid, theta, mc.trial_rng(seed, j)).X
    a = 1.0 - theta * grid.dt
    exact = grid.dt * (1.0 - a ** (2 * n)) / (1.0 - a * a)
    se = float(xs.std(ddof=1)) / math.sqrt(m)
    good = abs(float(xs.mean()) - exact) <= 3.0 * se
    ok &= good
    details.append(
        f"terminal variance: MC {xs.mean():.5f} vs exact {exact:.5f} (3se={3 * se:.5f})"
    )

    # the route A/B gap halves (within 30%) when the step count doubles;
    # Richardson comparison of the mean gap, which isolates the O(dt) bias
    model = build_model(N=3)
    gaps = {}
    for n in (5000, 10000):
        grid = TimeGrid(100.0, n)
        acc = 0.0
        trials = 2000
        for j in range(trials):
            stats = sim.simulate_trial(model, grid, _HYP.theta0, mc.trial_rng(seed, j))
            acc += sim.log_lr(stats, _HYP, model, grid, "A") - sim.log_lr(
                stats, _HYP, model, grid, "B"
            )
        gaps[n] = abs(acc / trials)
    ratio = gaps[10000] / gaps[5000]
    good = 0.35 <= ratio <= 0.65
    ok &= good
    details.append(f"route A/B gap ratio after doubling n: {ratio:.3f} (want 0.5 +- 0.15)")
    return CriterionResult(10, "simulator oracles", ok, details)


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
}
QUICK = (1, 2, 3)


def run_criteria(numbers, m=None, seed=None, workers=None) -> list[CriterionResult]:
    out = []
    for num in numbers:
        fn = CRITERIA[num]
        if num in (4, 5, 6, 7, 8):
            out.append(fn(m=m, seed=seed, workers=workers))
        elif num in (9, 10):
            out.append(fn(seed=seed))
        else:
            out.append(fn())
    return out
