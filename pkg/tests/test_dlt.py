import math

import numpy as np
import pytest

import oracles
from smoothcast import (
    DltParams,
    DltPriors,
    FinalState,
    GlobalTrend,
    RandomSource,
    dlt_filter,
    dlt_forecast,
    global_trend_eval,
    initialize_states,
    validate_series,
)
from smoothcast.dlt import RegressionPrior, dlt_log_posterior
from smoothcast.distributions import studentt_logpdf
from smoothcast.exceptions import ArityMismatch, InvalidParameter, RegressorMissing
from smoothcast.series import InitialState

FROZEN = 1e-12
HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


class TestGlobalTrend:
    def test_zero_linear(self):
        assert global_trend_eval(GlobalTrend("linear", (0, 0)), 17) == 0.0

    def test_linear_plug_in(self):
        assert global_trend_eval(GlobalTrend("linear", (1, 2)), 3) == 7.0

    def test_logistic_asymptote(self):
        trend = GlobalTrend("logistic", (5.0, 0.5, 10.0))
        assert global_trend_eval(trend, 1e4) == pytest.approx(5.0, abs=1e-12)
        assert global_trend_eval(trend, 10.0) == pytest.approx(2.5)

    def test_loglinear(self):
        assert global_trend_eval(GlobalTrend("log-linear", (1, 2)), math.e - 1) == pytest.approx(3.0)

    def test_flat_vector(self):
        np.testing.assert_array_equal(global_trend_eval(GlobalTrend("flat", (4,)), [1, 2, 3]), 4.0)

    def test_arity(self):
        with pytest.raises(ArityMismatch):
            GlobalTrend("linear", (1.0,))

    def test_unknown_kind(self):
        with pytest.raises(InvalidParameter):
            GlobalTrend("cubic", (1.0,))


class TestDltFilter:
    def test_hand_recursion(self):
        s = validate_series([1], [12.0])
        p = DltParams(0.5, 0.5, theta=1.0, trend_coeffs=(0.0,))
        r = dlt_filter(s, InitialState(10.0, 1.0, np.zeros(1)), p, "flat")
        assert r.one_step_means[0] == 11.0
        assert r.levels[0] == 11.5
        assert r.trends[0] == 1.25

    def test_theta_zero_drops_carryover(self):
        rng = np.random.default_rng(4)
        s = validate_series(np.arange(20), 30 + rng.normal(0, 3, 20))
        init = initialize_states(s)
        r = dlt_filter(s, init, DltParams(0.4, 0.3, theta=0.0, trend_coeffs=(0.0, 0.1)), "linear")
        previous = np.concatenate([[init.level_0], r.levels[:-1]])
        np.testing.assert_array_equal(r.trends, 0.3 * (r.levels - previous))

    def test_missing_regressors(self):
        s = validate_series([1, 2, 3], [1.0, 2.0, 3.0])
        with pytest.raises(RegressorMissing):
            dlt_filter(s, initialize_states(s), DltParams(0.5, 0.5, beta=(1.0,)), "flat")

    def test_negative_values_allowed(self):
        s = validate_series(np.arange(6), [-3.0, -1.0, 2.0, -4.0, 0.0, 1.0])
        r = dlt_filter(s, initialize_states(s), DltParams(0.5, 0.5), "flat")
        assert np.isfinite(r.log_likelihood)

    def test_matches_oracle_with_regressors(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(30, 2))
        y = 20 + 0.3 * np.arange(30) + x @ [1.5, -0.5] + rng.normal(0, 1, 30)
        s = validate_series(np.arange(30), y, x, period_m=6)
        init = initialize_states(s)
        p = DltParams(0.3, 0.2, 0.4, theta=0.9, beta=(1.2, -0.4),
                      trend_coeffs=(2.0, 0.25), nu=6.0, sigma=1.1)
        ref = oracles.naive_dlt(y, x.tolist(), 6, init.level_0, init.trend_0, init.seasonal_0,
                                0.3, 0.2, 0.4, 0.9, (1.2, -0.4), "linear", (2.0, 0.25), 6.0, 1.1)
        r = dlt_filter(s, init, p, "linear")
        for name in ("levels", "trends", "seasonal", "residuals", "next_seasonal"):
            np.testing.assert_allclose(getattr(r, name), ref[name], rtol=1e-12, atol=1e-12)
        assert r.log_likelihood == pytest.approx(ref["log_likelihood"], rel=1e-12)


class TestDltPosterior:
    def test_zero_beta_adds_prior_mode(self):
        rng = np.random.default_rng(6)
        y = 10 + rng.normal(0, 1, 12)
        x = rng.normal(size=(12, 3))
        plain = validate_series(np.arange(12), y)
        with_x = validate_series(np.arange(12), y, x)
        init = initialize_states(plain)
        base = dlt_log_posterior(plain, init, DltParams(0.5, 0.5, trend_coeffs=(0.0, 0.0)),
                                 "linear", DltPriors(1.0))
        priors = DltPriors(1.0, RegressionPrior.default(3))
        extended = dlt_log_posterior(
            with_x, init, DltParams(0.5, 0.5, beta=(0, 0, 0), trend_coeffs=(0.0, 0.0)),
            "linear", priors,
        )
        assert extended - base == pytest.approx(-3 * HALF_LOG_2PI, abs=1e-10)

    def test_perfect_fit_likelihood(self):
        # flat D=0, theta=0: mu_t = l_{t-1}; observations equal to mu keep l constant
        s = validate_series(np.arange(8), [7.0] * 8)
        init = InitialState(7.0, 0.0, np.zeros(1))
        p = DltParams(0.5, 0.5, theta=0.0, trend_coeffs=(0.0,), nu=5.0, sigma=0.7)
        r = dlt_filter(s, init, p, "flat")
        np.testing.assert_array_equal(r.residuals, 0.0)
        assert r.log_likelihood == pytest.approx(8 * studentt_logpdf(0.0, 5.0, 0.0, 0.7), rel=1e-13)

    def test_beta_delta_matches_script(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(25, 2))
        y = 5 + x @ [2.0, 1.0] + rng.normal(0, 0.5, 25)
        s = validate_series(np.arange(25), y, x, period_m=1)
        init = initialize_states(s)
        priors = DltPriors(0.5, RegressionPrior((0.0, 1.0), (1.0, 2.0)), trend_sd=10.0)

        def params(beta):
            return DltParams(0.4, 0.1, theta=0.7, beta=beta, trend_coeffs=(0.5,), nu=8.0, sigma=0.6)

        def script(beta):
            ref = oracles.naive_dlt(y, x.tolist(), 1, init.level_0, init.trend_0, None,
                                    0.4, 0.1, 0.5, 0.7, beta, "flat", (0.5,), 8.0, 0.6)
            prior = (oracles.mp_normal_logpdf(beta[0], 0.0, 1.0)
                     + oracles.mp_normal_logpdf(beta[1], 1.0, 2.0))
            return ref["log_likelihood"] + prior

        a, b = (1.8, 0.9), (2.1, 1.2)
        delta = (dlt_log_posterior(s, init, params(b), "flat", priors)
                 - dlt_log_posterior(s, init, params(a), "flat", priors))
        assert delta == pytest.approx(script(b) - script(a), rel=1e-9)


class TestDltForecast:
    def test_frozen_smoothing(self):
        # b stays fixed, and with theta=1 the level update carries it forward:
        # step k forecasts l_T + k * b_T
        state = FinalState.single(10.0, 1.0, [0.0], 50)
        p = DltParams(FROZEN, FROZEN, theta=1.0, trend_coeffs=(0.0,))
        fc = dlt_forecast(state, p, "flat", None, 5, mode="deterministic")
        np.testing.assert_allclose(fc.paths[0], [11.0, 12.0, 13.0, 14.0, 15.0], rtol=1e-9)

    def test_frozen_undamped_trend_zero(self):
        state = FinalState.single(10.0, 0.0, [0.0], 50)
        p = DltParams(FROZEN, FROZEN, theta=1.0, trend_coeffs=(0.0,))
        fc = dlt_forecast(state, p, "flat", None, 5, mode="deterministic")
        np.testing.assert_allclose(fc.paths[0], 10.0, rtol=1e-9)

    def test_constant_regressor_shift(self):
        state = FinalState.single(10.0, 0.3, [1.0, -1.0], 40)
        base = DltParams(0.3, 0.2, 0.1, theta=0.8, trend_coeffs=(0.0, 0.1))
        shifted = DltParams(0.3, 0.2, 0.1, theta=0.8, beta=(2.5,), trend_coeffs=(0.0, 0.1))
        a = dlt_forecast(state, base, "linear", None, 8, mode="deterministic").paths[0]
        b = dlt_forecast(state, shifted, "linear", np.ones((8, 1)), 8, mode="deterministic").paths[0]
        np.testing.assert_allclose(b - a, 2.5, rtol=1e-12)

    def test_trend_time_continues(self):
        state = FinalState.single(0.0, 0.0, [0.0], 10)
        p = DltParams(FROZEN, FROZEN, theta=0.0, trend_coeffs=(1.0, 2.0))
        fc = dlt_forecast(state, p, "linear", None, 3, mode="deterministic").paths[0]
        np.testing.assert_allclose(fc, [23.0, 25.0, 27.0], rtol=1e-9)

    def test_stochastic_median_near_deterministic(self):
        state = FinalState.single(100.0, 0.5, [0.0], 30)
        p = DltParams(0.3, 0.2, theta=0.9, trend_coeffs=(0.0, 0.2), nu=10.0, sigma=1.0)
        det = dlt_forecast(state, p, "linear", None, 12, mode="deterministic").paths[0]
        dist = dlt_forecast(state, p, "linear", None, 12, 4000, RandomSource(9))
        se = 1.2533 * dist.paths.std(axis=0) / math.sqrt(dist.n_paths)
        assert np.all(np.abs(dist.median - det) <= 3 * se)

    def test_missing_future_regressors(self):
        state = FinalState.single(1.0, 0.0, [0.0], 5)
        p = DltParams(0.5, 0.5, beta=(1.0,))
        with pytest.raises(RegressorMissing):
            dlt_forecast(state, p, "flat", None, 3, mode="deterministic")
        with pytest.raises(RegressorMissing):
            dlt_forecast(state, p, "flat", np.ones((2, 1)), 3, mode="deterministic")
