import json

import numpy as np
import pytest

from spdetest import (
    Hypotheses,
    ParameterError,
    TestLevel,
    TimeGrid,
    build_model,
    model_from_config,
    model_to_config,
)


class TestHypotheses:
    def test_orders_drifts(self):
        h = Hypotheses(0.1, 0.2)
        assert h.diff == pytest.approx(0.1)
        assert h.total == pytest.approx(0.3)
        assert h.sq_diff == pytest.approx(0.03)

    @pytest.mark.parametrize("t0,t1", [(0.2, 0.1), (0.1, 0.1), (-0.1, 0.2), (0.0, 0.2)])
    def test_rejects_bad_pairs(self, t0, t1):
        with pytest.raises(ParameterError):
            Hypotheses(t0, t1)

    def test_theta_lookup(self):
        h = Hypotheses(0.1, 0.2)
        assert h.theta(0) == 0.1 and h.theta(1) == 0.2
        with pytest.raises(ParameterError):
            h.theta(2)


class TestTestLevel:
    @pytest.mark.parametrize("alpha,rho", [(0.0, 0.1), (1.0, 0.1), (0.05, 0.0), (0.05, -1.0)])
    def test_rejects_bad_levels(self, alpha, rho):
        with pytest.raises(ParameterError):
            TestLevel(alpha, rho)


class TestTimeGrid:
    def test_dt_times_n_is_horizon(self):
        g = TimeGrid(100.0, 333)
        assert g.n * g.dt == pytest.approx(g.T, rel=1e-15)

    def test_from_dt_respects_cap(self):
        g = TimeGrid.from_dt(1.0, 7.8125e-5)
        assert g.dt <= 7.8125e-5 * (1 + 1e-12)
        assert g.n == 12800

    def test_rejects_bad_grids(self):
        with pytest.raises(ParameterError):
            TimeGrid(0.0, 10)
        with pytest.raises(ParameterError):
            TimeGrid(1.0, 0)


class TestBuildModel:
    def test_spectral_weight_three_modes(self):
        # 1 + 4 + 9
        assert build_model(N=3).M == 14.0

    def test_single_mode(self):
        assert build_model(N=1).M == 1.0

    def test_spectral_weight_eighty_modes(self):
        # closed form N(N+1)(2N+1)/6 for lam_k = k, beta = 1
        assert build_model(N=80).M == 80 * 81 * 161 / 6 == 173880.0

    def test_default_basis_is_integers_in_1d(self):
        m = build_model(N=5, d=1)
        assert np.array_equal(m.eigenvalues, [1.0, 2.0, 3.0, 4.0, 5.0])

    def test_power_basis_in_2d(self):
        m = build_model(N=4, d=2)
        assert m.eigenvalues == pytest.approx(np.sqrt([1.0, 2.0, 3.0, 4.0]))

    def test_weight_increases_with_modes(self):
        ms = [build_model(N=n).M for n in range(1, 30)]
        assert all(a < b for a, b in zip(ms, ms[1:]))

    def test_explicit_eigenvalues(self):
        m = build_model(N=3, eigenvalue_source=[1.5, 2.5, 2.5])
        assert m.basis == "explicit"
        assert m.M == pytest.approx(1.5**2 + 2 * 2.5**2)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(sigma=0.0),
            dict(sigma=-1.0),
            dict(beta=0.0),
            dict(N=0),
            dict(gamma=-0.5),
            dict(d=0),
            dict(N=3, eigenvalue_source=[3.0, 2.0, 1.0]),
            dict(N=3, eigenvalue_source=[1.0, -2.0, 3.0]),
            dict(N=3, eigenvalue_source=[1.0, 2.0]),
        ],
    )
    def test_rejects_invalid_parameters(self, kwargs):
        with pytest.raises(ParameterError):
            build_model(**kwargs)

    def test_nonzero_u0_flagged(self):
        with pytest.warns(UserWarning, match="nonzero initial"):
            build_model(N=2, u0=[0.0, 1.0])

    def test_arrays_immutable(self):
        m = build_model(N=3)
        with pytest.raises(ValueError):
            m.eigenvalues[0] = 5.0


class TestConfigRoundTrip:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(beta=1.0, N=3),
            dict(beta=0.75, gamma=0.3, sigma=2.0, d=2, N=7),
            dict(N=3, eigenvalue_source=[1.1, 2.2, 3.3]),
        ],
    )
    def test_bit_exact_rebuild(self, kwargs):
        m = build_model(**kwargs)
        cfg = json.loads(json.dumps(model_to_config(m)))  # through the wire format
        m2 = model_from_config(cfg)
        assert np.array_equal(m.eigenvalues, m2.eigenvalues)
        assert m.M == m2.M  # bit-exact
        assert np.array_equal(m.u0, m2.u0)
        assert (m.beta, m.gamma, m.sigma, m.d, m.N) == (m2.beta, m2.gamma, m2.sigma, m2.d, m2.N)

    def test_schema_keys(self):
        cfg = model_to_config(build_model(N=2))
        assert set(cfg) == {"beta", "gamma", "sigma", "d", "N", "basis", "u0"}
        cfg2 = model_to_config(build_model(N=2, eigenvalue_source=[1.0, 4.0]))
        assert "eigenvalues" in cfg2
