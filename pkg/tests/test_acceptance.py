"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL/SKIP line that is printed in the terminal
summary; tolerances are pinned in the module constants below.
"""

import contextlib
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_RESULTS
from smoothcast import (
    DltParams,
    LgtParams,
    ModelConfig,
    RandomSource,
    SplitScheme,
    dlt_filter,
    generate_splits,
    halfcauchy_logpdf,
    initialize_states,
    lgt_filter,
    normal_logpdf,
    smape,
    studentt_logpdf,
    validate_series,
)
from smoothcast import artifact, cli
from smoothcast.backtest import naive_forecaster, run_backtest
from smoothcast.exceptions import ChecksumMismatch, LevelCollapse
from smoothcast.inference import effective_sample_size, make_specs, mcmc_sample, split_rhat

FILTER_RTOL = 1e-10
FILTER_INSTANCES = 1000
FILTER_SECONDS = 10.0
ETS_TOL = 1e-10
ETS_INSTANCES = 100
UNIT_TOL = 1e-12
MCMC_MEAN_TOL, MCMC_SD_TOL, MCMC_RHAT, MCMC_ESS, MCMC_SECONDS = 0.1, 0.3, 1.05, 400, 30.0
RECOVERY_SMAPE, RECOVERY_SECONDS = 0.05, 60.0
M3_SMAPE, M3_MIN_SERIES, M3_SECONDS = 0.25, 30, 15 * 60.0
M3_ENV = "SMOOTHCAST_M3_MONTHLY"

FILTER_FIELDS = ("levels", "trends", "seasonal", "one_step_means", "residuals", "next_seasonal")


@contextlib.contextmanager
def criterion(number, detail=""):
    """Record PASS or FAIL for ``number``; ``detail`` may be updated via the yielded dict."""
    info = {"detail": detail}
    try:
        yield info
    except pytest.skip.Exception:
        ACCEPTANCE_RESULTS.append((number, "SKIP", info["detail"]))
        raise
    except BaseException:
        ACCEPTANCE_RESULTS.append((number, "FAIL", info["detail"]))
        raise
    ACCEPTANCE_RESULTS.append((number, "PASS", info["detail"]))


def _rel_err(a, b):
    a, b = np.atleast_1d(np.asarray(a, float)), np.atleast_1d(np.asarray(b, float))
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))) if a.size else 0.0


def _random_positive_series(rng, m):
    T = int(rng.integers(max(2 * m, 3), 51))
    t = np.arange(1, T + 1)
    base = rng.uniform(20, 200)
    slope = rng.uniform(-0.3, 0.6)
    amp = rng.uniform(0, 0.1) * base if m > 1 else 0.0
    y = base + slope * t + amp * np.sin(2 * np.pi * t / m) + rng.normal(0, 0.03 * base, T)
    return validate_series(t, np.abs(y) + 1.0, period_m=m)


class TestCriterion01FilterOracle:
    def test_lgt_and_dlt_match_naive_recursions(self):
        rng = np.random.default_rng(20240101)
        with criterion(1) as info:
            start = time.perf_counter()
            worst = {"lgt": 0.0, "dlt": 0.0}
            done = {"lgt": 0, "dlt": 0}
            while done["lgt"] < FILTER_INSTANCES:
                m = int(rng.choice([1, 4, 12]))
                series = _random_positive_series(rng, m)
                init = initialize_states(series)
                p = LgtParams(
                    rho_l=rng.uniform(0.01, 0.99), rho_b=rng.uniform(0.01, 0.99),
                    rho_s=rng.uniform(0.01, 0.99), xi1=rng.uniform(0, 1),
                    xi2=rng.uniform(-0.5, 0.5), lam=rng.uniform(0, 1),
                    nu=rng.uniform(2, 40), sigma=rng.uniform(0.1, 10),
                )
                try:
                    got = lgt_filter(series, init, p)
                except LevelCollapse:
                    continue
                ref = oracles.naive_lgt(series.values, m, init.level_0, init.trend_0,
                                        init.seasonal_0, p.rho_l, p.rho_b, p.rho_s, p.xi1,
                                        p.xi2, p.lam, p.nu, p.sigma)
                for name in FILTER_FIELDS + ("log_likelihood",):
                    worst["lgt"] = max(worst["lgt"], _rel_err(getattr(got, name), ref[name]))
                done["lgt"] += 1

            kinds = ["flat", "linear", "loglinear", "logistic"]
            while done["dlt"] < FILTER_INSTANCES:
                m = int(rng.choice([1, 4, 12]))
                series = _random_positive_series(rng, m)
                J = int(rng.integers(0, 3))
                x = rng.normal(size=(len(series), J))
                series = validate_series(series.timestamps, series.values, x, m)
                init = initialize_states(series)
                kind = kinds[int(rng.integers(0, 4))]
                coeffs = {
                    "flat": (rng.normal(0, 5),),
                    "linear": (rng.normal(0, 5), rng.normal(0, 1)),
                    "loglinear": (rng.normal(0, 5), rng.normal(0, 3)),
                    "logistic": (rng.uniform(1, 20), rng.uniform(0.01, 1), rng.uniform(0, 50)),
                }[kind]
                p = DltParams(
                    rho_l=rng.uniform(0.01, 0.99), rho_b=rng.uniform(0.01, 0.99),
                    rho_s=rng.uniform(0.01, 0.99), theta=rng.uniform(0, 1),
                    beta=tuple(rng.normal(0, 1, J)), trend_coeffs=coeffs,
                    nu=rng.uniform(2, 40), sigma=rng.uniform(0.1, 10),
                )
                got = dlt_filter(series, init, p, kind)
                ref = oracles.naive_dlt(series.values, x.tolist(), m, init.level_0, init.trend_0,
                                        init.seasonal_0, p.rho_l, p.rho_b, p.rho_s, p.theta,
                                        p.beta, kind, coeffs, p.nu, p.sigma)
                for name in FILTER_FIELDS + ("log_likelihood",):
                    worst["dlt"] = max(worst["dlt"], _rel_err(getattr(got, name), ref[name]))
                done["dlt"] += 1
            elapsed = time.perf_counter() - start
            info["detail"] = (f"max rel err lgt={worst['lgt']:.2e} dlt={worst['dlt']:.2e} "
                              f"(tol {FILTER_RTOL:g}), {elapsed:.1f}s (limit {FILTER_SECONDS:g}s)")
            assert worst["lgt"] <= FILTER_RTOL
            assert worst["dlt"] <= FILTER_RTOL
            assert elapsed < FILTER_SECONDS


class TestCriterion02EtsReduction:
    def test_lgt_with_xi1_one_matches_additive_holt_winters(self):
        rng = np.random.default_rng(7)
        with criterion(2) as info:
            worst = 0.0
            for _ in range(ETS_INSTANCES):
                m = int(rng.choice([1, 4, 12]))
                series = _random_positive_series(rng, m)
                init = initialize_states(series)
                p = LgtParams(rho_l=rng.uniform(0.05, 0.95), rho_b=rng.uniform(0.05, 0.95),
                              rho_s=rng.uniform(0.05, 0.95), xi1=1.0, xi2=0.0)
                got = lgt_filter(series, init, p)
                predicted = got.one_step_means + got.seasonal
                hw = oracles.holt_winters_additive(series.values, m, init.level_0, init.trend_0,
                                                   init.seasonal_0, p.rho_l, p.rho_b, p.rho_s)
                worst = max(worst, float(np.max(np.abs(predicted - hw) / np.abs(hw))))
            info["detail"] = f"max rel diff vs Holt-Winters {worst:.2e} (tol {ETS_TOL:g})"
            assert worst <= ETS_TOL


class TestCriterion03UnitValues:
    def test_closed_form_values(self):
        with criterion(3) as info:
            errs = [
                abs(studentt_logpdf(0.0, 1.0, 0.0, 1.0) - (-math.log(math.pi))),
                abs(halfcauchy_logpdf(0.0, 1.0) - math.log(2 / math.pi)),
                abs(normal_logpdf(0.0, 0.0, 1.0) - (-0.5 * math.log(2 * math.pi))),
            ]
            info["detail"] = f"max abs err {max(errs):.1e} (tol {UNIT_TOL:g})"
            assert max(errs) <= UNIT_TOL


class TestCriterion04Sampler:
    def test_gaussian_target(self):
        with criterion(4) as info:
            specs = make_specs([("x", "unbounded")])
            start = time.perf_counter()
            draws = mcmc_sample(lambda v: -0.5 * ((v[0] - 3.0) / 2.0) ** 2, specs, [0.0],
                                n_chains=4, n_warmup=1000, n_draws=2000, rs=RandomSource(11))
            elapsed = time.perf_counter() - start
            x = draws.draws[:, :, 0]
            mean, sd = float(x.mean()), float(x.std())
            rhat, ess = split_rhat(x), effective_sample_size(x)
            info["detail"] = (f"mean {mean:.3f} sd {sd:.3f} rhat {rhat:.4f} ess {ess:.0f} "
                              f"{elapsed:.1f}s")
            assert abs(mean - 3.0) <= MCMC_MEAN_TOL
            assert abs(sd - 2.0) <= MCMC_SD_TOL
            assert rhat < MCMC_RHAT
            assert ess > MCMC_ESS
            assert elapsed < MCMC_SECONDS


def simulate_recovery_series(seed=2024, T=120, m=12):
    """Linear trend plus monthly seasonality with Student-t(10) noise at 2% of level."""
    rng = np.random.default_rng(seed)
    t = np.arange(1, T + 1)
    level = 100.0 + 0.8 * t
    season = 8.0 * np.sin(2 * np.pi * t / m) + 4.0 * np.cos(4 * np.pi * t / m)
    y = level + season + 0.02 * level * rng.standard_t(10, T)
    return validate_series(t, y, period_m=m)


class TestCriterion05SyntheticRecovery:
    def test_dlt_map_holdout_smape(self):
        with criterion(5) as info:
            series = simulate_recovery_series()
            h = 18
            train = series.head(len(series) - h)
            start = time.perf_counter()
            fitted = ModelConfig(model="dlt", global_trend="linear").fit(train, seed=0)
            forecast = fitted.point_forecast(h)
            elapsed = time.perf_counter() - start
            score = smape(forecast, series.values[-h:])
            info["detail"] = f"SMAPE {score:.4f} (limit {RECOVERY_SMAPE}), {elapsed:.1f}s"
            assert score < RECOVERY_SMAPE
            assert elapsed < RECOVERY_SECONDS


class TestCriterion06M3:
    def test_m3_monthly_desk_scale(self):
        with criterion(6) as info:
            path = os.environ.get(M3_ENV)
            if not path or not Path(path).exists():
                info["detail"] = f"M3 monthly data not available (set {M3_ENV})"
                pytest.skip(info["detail"])
            series_set, _ = cli.read_series_set(path, 12)
            if len(series_set) < M3_MIN_SERIES:
                info["detail"] = f"only {len(series_set)} series under {path}"
                pytest.skip(info["detail"])
            scheme = SplitScheme(18, 1, 1, 24)
            start = time.perf_counter()
            model = run_backtest(series_set, ModelConfig(model="lgt", mode="multiplicative"),
                                 scheme, seed=0, n_jobs=os.cpu_count() or 1)
            naive = run_backtest(series_set, naive_forecaster, scheme)
            elapsed = time.perf_counter() - start
            info["detail"] = (f"LGT {model.mean:.4f} vs naive {naive.mean:.4f} on "
                              f"{len(model.succeeded)} series, {elapsed:.0f}s")
            assert len(model.succeeded) >= M3_MIN_SERIES
            assert model.mean <= M3_SMAPE
            assert model.mean < naive.mean
            assert elapsed < M3_SECONDS


class TestCriterion07Smape:
    def test_properties_and_unit_examples(self):
        rng = np.random.default_rng(3)
        with criterion(7) as info:
            assert smape([5, 5], [5, 5]) == 0.0
            assert smape([3], [1]) == 1.0
            assert smape([1, 3], [1, 1]) == 0.5
            for _ in range(1000):
                h = int(rng.integers(1, 20))
                f, a = rng.normal(0, 10, h), rng.normal(0, 10, h)
                c = float(rng.uniform(1e-3, 1e3))
                s = smape(f, a)
                assert s == smape(a, f)
                assert math.isclose(smape(c * f, c * a), s, rel_tol=1e-12, abs_tol=1e-15)
                assert 0.0 <= s <= 2.0
            info["detail"] = "unit examples exact; symmetry, scale invariance, range on 1000 cases"


class TestCriterion08Splits:
    def test_train_ends(self):
        with criterion(8) as info:
            splits = generate_splits(104, SplitScheme(13, 3, 26))
            ends = [s.train_end for s in splits]
            info["detail"] = f"train ends {ends}"
            assert ends == [39, 65, 91]


def _write_csv(path, y):
    with open(path, "w") as fh:
        fh.write("ds,y\n")
        for i, v in enumerate(y, start=1):
            fh.write(f"{i},{float(v)!r}\n")


def _fit_predict(tmp_path, tag, threads, method="map"):
    model_path = tmp_path / f"m_{tag}.bin"
    out_path = tmp_path / f"p_{tag}.csv"
    extra = ["--method", "mcmc", "--warmup", "200", "--draws", "100"] if method == "mcmc" else []
    assert cli.main(["fit", "--model", "lgt", "--input", str(tmp_path / "y.csv"), "--period",
                     "12", "--mode", "multiplicative", "--seed", "7", "--output",
                     str(model_path), "--threads", str(threads)] + extra) == 0
    assert cli.main(["predict", "--model", str(model_path), "--h", "13", "--seed", "5",
                     "--threads", str(threads), "--output", str(out_path)]) == 0
    return model_path.read_bytes(), out_path.read_bytes()


class TestCriterion09Determinism:
    def test_fit_predict_identical_across_runs_and_threads(self, tmp_path, capsys):
        with criterion(9) as info:
            _write_csv(tmp_path / "y.csv", simulate_recovery_series(seed=5).values)
            runs = {
                "map1a": _fit_predict(tmp_path, "a", 1),
                "map1b": _fit_predict(tmp_path, "b", 1),
                "map4": _fit_predict(tmp_path, "c", 4),
                "mcmc1": _fit_predict(tmp_path, "d", 1, "mcmc"),
                "mcmc4": _fit_predict(tmp_path, "e", 4, "mcmc"),
            }
            info["detail"] = "MAP and MCMC artifacts and forecast tables byte-identical (1 vs 4 threads)"
            assert runs["map1a"] == runs["map1b"] == runs["map4"]
            assert runs["mcmc1"] == runs["mcmc4"]


class TestCriterion10Artifact:
    def test_round_trip_and_corruption(self):
        with criterion(10) as info:
            series = simulate_recovery_series(seed=9)
            fitted = ModelConfig(model="dlt", method="mcmc", warmup=200, draws=100).fit(series)
            blob = artifact.dumps(fitted)
            assert artifact.dumps(artifact.loads(blob)) == blob
            detected = 0
            for pos in (30, len(blob) // 2, len(blob) - 5):
                corrupted = bytearray(blob)
                corrupted[pos] ^= 0x01
                with pytest.raises(ChecksumMismatch):
                    artifact.loads(bytes(corrupted))
                detected += 1
            with pytest.raises(ChecksumMismatch):
                artifact.loads(blob[:-10])
            detected += 1
            info["detail"] = f"{len(blob)} bytes re-serialize identically; {detected}/4 corruptions detected"
