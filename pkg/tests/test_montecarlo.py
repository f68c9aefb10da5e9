import json
import math

import pytest
import scipy.stats

from oracles import EXACT, exact_prob_lnl_ge, exact_prob_lnl_le
from spdetest import (
    ErrorEstimate,
    ExperimentSpec,
    ParameterError,
    TestLevel,
    TimeGrid,
    build_model,
    estimate_error,
    eta_level,
    reproduce_table,
    sharp_threshold,
    trial_rng,
    wilson_interval,
)
from spdetest.montecarlo import check_rows, default_base_seed, rows_to_csv, CSV_COLUMNS
from spdetest.sim import TrialStats


def spec_for(model, T, n, test_kind, error_kind, m, hyp, level, seed=12345):
    return ExperimentSpec(
        model=model, grid=TimeGrid(T, n), hyp=hyp, level=level,
        test_kind=test_kind, error_kind=error_kind, m=m, base_seed=seed,
    )


class TestTrialRng:
    def test_streams_are_reproducible_and_distinct(self):
        a = trial_rng(1, 0).standard_normal(4)
        b = trial_rng(1, 0).standard_normal(4)
        c = trial_rng(1, 1).standard_normal(4)
        d = trial_rng(2, 0).standard_normal(4)
        assert (a == b).all()
        assert not (a == c).all()
        assert not (a == d).all()


class TestWilson:
    def test_against_scipy(self):
        for k, m in ((3, 100), (0, 50), (50, 50), (198, 20000)):
            lo, hi = wilson_interval(k, m)
            slo, shi = scipy.stats.binomtest(k, m).proportion_ci(0.95, method="wilson")
            assert lo == pytest.approx(slo, abs=1e-9)
            assert hi == pytest.approx(shi, abs=1e-9)

    def test_stays_inside_unit_interval(self):
        lo, hi = wilson_interval(0, 10)
        assert lo == 0.0 and 0.0 < hi < 0.5
        lo, hi = wilson_interval(10, 10)
        assert hi == pytest.approx(1.0) and hi <= 1.0 and 0.5 < lo < 1.0


class TestEstimateError:
    def test_zero_noise_stub_never_rejects(self, hyp, model3, level):
        spec = spec_for(model3, 100.0, 100, "RT0", "type1", 64, hyp, level)
        stub = lambda j: TrialStats(0.0, 0.0, 0.0, 0.0, hyp.theta0)
        est = estimate_error(spec, trial_fn=stub)
        assert est.p_hat == 0.0 and est.stderr == 0.0 and est.events == 0

    def test_stderr_formula_exact(self, hyp, model3, level):
        spec = spec_for(model3, 10.0, 100, "RT0", "type1", 512, hyp, level)
        est = estimate_error(spec)
        assert est.p_hat == est.events / est.m
        assert est.stderr**2 * est.m == pytest.approx(est.p_hat * (1 - est.p_hat), rel=1e-12)

    def test_worker_count_invariance(self, hyp, model3, level):
        spec = spec_for(model3, 10.0, 100, "RT0", "type1", 700, hyp, level)
        blobs = {w: estimate_error(spec, workers=w).canonical_bytes() for w in (1, 3, 16)}
        assert blobs[1] == blobs[3] == blobs[16]

    def test_type1_matches_exact_law(self, hyp, model3, level):
        # independent oracle: characteristic-function inversion of the exact law
        spec = spec_for(model3, 100.0, 5000, "RT0", "type1", 4000, hyp, level)
        est = estimate_error(spec)
        assert est.p_hat == pytest.approx(EXACT["typeI_RT0_T100"], abs=4 * est.stderr + 1e-3)

    def test_sharp_type1_matches_exact_law(self, hyp, model3, level):
        spec = spec_for(model3, 100.0, 5000, "RTsharp", "type1", 4000, hyp, level)
        est = estimate_error(spec)
        assert est.p_hat == pytest.approx(EXACT["typeI_RTsharp_T100"], abs=4 * est.stderr + 2e-3)

    def test_type2_matches_exact_law(self, hyp, model3, level):
        spec = spec_for(model3, 40.0, 2000, "RT0", "type2", 4000, hyp, level)
        est = estimate_error(spec)
        assert est.p_hat == pytest.approx(EXACT["typeII_RT0_T40"], abs=4 * est.stderr + 2e-3)

    def test_mode_regime_matches_exact_law(self, hyp, level):
        model = build_model(N=10)
        spec = spec_for(model, 1.0, 200, "RN0", "type1", 4000, hyp, level)
        est = estimate_error(spec)
        assert est.p_hat == pytest.approx(EXACT["typeI_RN0_N10"], abs=4 * est.stderr + 3e-3)

    def test_type1_bounded_when_horizon_long_enough(self, hyp, model3, level):
        # the calibration guarantee: p <= (1+rho) alpha (+MC noise) at T >= T_b1
        spec = spec_for(model3, 818.0, 818 * 50, "RT0", "type1", 2000, hyp, level)
        est = estimate_error(spec)
        assert est.p_hat <= 1.1 * level.alpha + 3 * est.stderr

    def test_type2_bounded_when_horizon_long_enough(self, hyp, model3, level):
        # beyond the type-2 minimal horizon the exponential bound applies
        from spdetest import type2_bound

        spec = spec_for(model3, 818.0, 818 * 50, "RT0", "type2", 2000, hyp, level)
        est = estimate_error(spec)
        bound = type2_bound(818.0, model3.M, hyp, level.rho).bound
        assert est.p_hat <= bound + 3 * est.stderr

    def test_runtime_recorded_but_not_canonical(self, hyp, model3, level):
        spec = spec_for(model3, 10.0, 100, "RT0", "type1", 64, hyp, level)
        est = estimate_error(spec)
        assert est.runtime_s > 0.0
        assert "runtime_s" not in est.canonical_dict()

    def test_invalid_specs_rejected(self, hyp, model3, level):
        with pytest.raises(ParameterError):
            spec_for(model3, 10.0, 100, "RT0", "type1", 0, hyp, level)
        with pytest.raises(ParameterError):
            spec_for(model3, 10.0, 100, "nope", "type1", 10, hyp, level)
        with pytest.raises(ParameterError):
            spec_for(model3, 10.0, 100, "RT0", "sideways", 10, hyp, level)


class TestExactOracleSelfCheck:
    def test_inversion_reproduces_frozen_values(self, hyp):
        # double-precision quadrature vs the 30-digit frozen references
        lam3 = [1, 2, 3]
        eta = eta_level(0.05, 100.0, 14.0, hyp)
        p = exact_prob_lnl_ge(eta.level * 100.0, 0, 100.0, lam3, 0.1, 0.2)
        assert p == pytest.approx(EXACT["typeI_RT0_T100"], rel=1e-6)
        eta10 = eta_level(0.05, 10.0, 14.0, hyp)
        p2 = exact_prob_lnl_le(eta10.level * 10.0, 1, 10.0, lam3, 0.1, 0.2)
        assert p2 == pytest.approx(EXACT["typeII_RT0_T10"], rel=1e-6)


class TestReproduceTable:
    def test_table4_bound_row_exact(self):
        result = reproduce_table(4, bound_only=True)
        assert not check_rows(result)
        rows = {r["col_key"]: r["estimate"] for r in result.rows}
        assert rows["10"] == pytest.approx(1.586e-4, rel=1e-3)
        assert rows["60"] == pytest.approx(1.583e-23, rel=1e-3)

    def test_table2_smoke_structure(self):
        result = reproduce_table(2, m=200, base_seed=7)
        assert [r["col_key"] for r in result.rows] == ["0.1", "0.05", "0.01", "0.005"]
        for row, tb in zip(result.rows, (629, 818, 1258, 1447)):
            assert row["n"] == tb * 50  # dt = 0.02
            assert row["m"] == 200
            assert 0.0 <= row["estimate"] <= 1.0

    def test_table1_preset_sweeps_published_step_counts(self):
        result = reproduce_table(1, m=20, base_seed=7)
        rt0 = [r for r in result.rows if r["row_key"] == "RT0"]
        assert [r["col_key"] for r in rt0][:3] == ["1", "0.9", "0.8"]
        assert rt0[0]["n"] == 100 and rt0[-1]["n"] == 5000
        assert {r["row_key"] for r in result.rows} == {"RT0", "RTsharp"}

    def test_table3_preset_ladder(self):
        result = reproduce_table(3, m=20, base_seed=7)
        rt0 = [r for r in result.rows if r["row_key"] == "RT0"]
        assert [r["col_key"] for r in rt0] == ["818", "1318", "1818", "2318", "2818", "3318"]

    def test_table5_smoke_has_note_and_auto_grid(self):
        result = reproduce_table(5, m=50, base_seed=7)
        assert any("not reproducible" in note for note in result.notes)
        by_n = {r["col_key"]: r for r in result.rows}
        assert by_n["10"]["n"] == 200   # dt capped by the 0.1 stability margin
        assert by_n["80"]["n"] == 12800
        assert set(by_n) == {"10", "20", "30", "40", "50", "60", "70", "80"}

    def test_rows_serialize_to_csv(self):
        result = reproduce_table(4, bound_only=True)
        text = rows_to_csv(result.rows)
        header = text.splitlines()[0].split(",")
        assert tuple(header) == CSV_COLUMNS
        assert len(text.splitlines()) == 1 + len(result.rows)

    def test_identical_runs_are_bit_identical(self):
        a = reproduce_table(2, m=100, base_seed=3, workers=1)
        b = reproduce_table(2, m=100, base_seed=3, workers=4)
        assert json.dumps(a.rows, sort_keys=True) == json.dumps(b.rows, sort_keys=True)

    def test_rejects_unknown_table(self):
        with pytest.raises(ParameterError):
            reproduce_table(6)

    def test_check_rows_flags_out_of_tolerance(self):
        from spdetest.montecarlo import TableResult

        good = {"table": "2", "row_key": "RT0", "col_key": "0.05", "paper_value": 0.010,
                "estimate": 0.012, "tol": 0.005, "upper_bound": 0.055}
        off = dict(good, estimate=0.02, col_key="0.1", paper_value=0.021, tol=0.0005)
        above = dict(good, col_key="0.01", paper_value=0.052, estimate=0.056)
        fails = check_rows(TableResult(2, [good, off, above], [], {}))
        assert len(fails) == 2
        assert any("0.1" in f for f in fails)
        assert any("exceeds bound" in f for f in fails)


class TestDefaultSeed:
    def test_env_override(self, monkeypatch):
        monkeypatch.delenv("SPDETEST_SEED", raising=False)
        assert default_base_seed() == 12345
        monkeypatch.setenv("SPDETEST_SEED", "777")
        assert default_base_seed() == 777
        monkeypatch.setenv("SPDETEST_SEED", "x")
        with pytest.raises(ParameterError):
            default_base_seed()
