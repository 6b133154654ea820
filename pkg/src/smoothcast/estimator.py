"""Model-agnostic fitting and prediction.

:class:`Estimator` owns the interaction with the inference engine (MAP or
MCMC); the model adapter supplies everything model specific. The result is
a :class:`FittedModel` that carries its own end-of-data states, so it can
forecast (and be saved and reloaded) without the training data.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .distributions import RandomSource
from .exceptions import InvalidParameter, LevelCollapse
from .forecast import DETERMINISTIC, STOCHASTIC, FinalState, ForecastDistribution
from .models import build_model
from .inference import PosteriorDraws, effective_sample_size, map_fit, mcmc_sample, split_rhat
from .series import (
    InitialState,
    TimeSeries,
    initialize_states,
    inverse_log_transform,
    log_transform,
)

ADDITIVE = "additive"
MULTIPLICATIVE = "multiplicative"
FORECAST_STREAM = 1


def fingerprint(values):
    """Hex SHA-256 of the little-endian float64 bytes of ``values``."""
    data = np.ascontiguousarray(values, dtype="<f8").tobytes()
    return hashlib.sha256(data).hexdigest()


@dataclass
class FittedModel:
    model: object
    mode: str
    method: str
    init_state: InitialState
    priors: object
    points: np.ndarray
    final_states: FinalState
    seed: int = 0
    data_fingerprint: str = ""
    n_obs: int = 0
    fit_info: dict = field(default_factory=dict)
    draws: Optional[PosteriorDraws] = None

    def parameter_sets(self):
        return [self.model.unpack(row) for row in self.points]

    @property
    def point(self):
        """MAP vector, or the posterior median for MCMC fits."""
        if self.method == "map":
            return self.points[0]
        return np.median(self.points, axis=0)

    def predict(self, h, n_paths=1000, seed=None, future_regressors=None,
                mode=STOCHASTIC, n_jobs=1, rs=None) -> ForecastDistribution:
        """Forecast ``h`` steps on the original scale of the data.

        Multiplicative fits are simulated in log space and exponentiated path
        by path before any summary is taken. Noise comes from ``rs`` when
        given, else from ``seed`` (default: the fitting seed).
        """
        if rs is None:
            rs = RandomSource(self.seed if seed is None else seed)
        rs = rs.substream(FORECAST_STREAM)
        dist = self.model.forecast(
            self.final_states, self.parameter_sets(), h, n_paths, rs, mode,
            future_regressors=future_regressors, n_jobs=n_jobs,
        )
        if self.mode == MULTIPLICATIVE:
            dist = dist.map(inverse_log_transform)
        return dist

    def point_forecast(self, h, future_regressors=None, n_paths=1000, seed=None, rs=None):
        """Zero-noise path for MAP fits; path median for MCMC fits."""
        if self.method == "map":
            dist = self.predict(h, future_regressors=future_regressors, mode=DETERMINISTIC)
            return dist.paths[0]
        return self.predict(h, n_paths=n_paths, seed=seed, rs=rs,
                            future_regressors=future_regressors).median

    def summary(self):
        names = self.model.param_names()
        lines = [
            f"model={self.model.kind} mode={self.mode} method={self.method} "
            f"period={self.model.period_m} n_obs={self.n_obs}"
        ]
        for key in sorted(self.fit_info):
            value = self.fit_info[key]
            if isinstance(value, (list, dict)):
                continue
            lines.append(f"{key}: {value}")
        for i, name in enumerate(names):
            line = f"  {name:>16s} = {self.point[i]: .6g}"
            if self.draws is not None:
                col = self.draws.draws[:, :, i]
                line += f"   sd={np.std(col):.4g}"
                if self.draws.n_chains >= 2 and self.draws.n_iterations >= 4:
                    line += (f"  rhat={split_rhat(col):.4f}"
                             f"  ess={effective_sample_size(col):.0f}")
            lines.append(line)
        return "\n".join(lines)


class Estimator:
    """Fit a model adapter to a series by MAP (default) or MCMC."""

    def __init__(self, method="map", n_restarts=4, n_chains=4, n_warmup=1000,
                 n_draws=1000, seed=0, n_jobs=1):
        if method not in ("map", "mcmc"):
            raise InvalidParameter(f"unknown inference method {method!r}; choose map or mcmc")
        self.method = method
        self.n_restarts = n_restarts
        self.n_chains = n_chains
        self.n_warmup = n_warmup
        self.n_draws = n_draws
        self.seed = int(seed)
        self.n_jobs = n_jobs

    def fit(self, model, series: TimeSeries, mode=ADDITIVE, rs=None) -> FittedModel:
        if mode not in (ADDITIVE, MULTIPLICATIVE):
            raise InvalidParameter(f"unknown mode {mode!r}; choose additive or multiplicative")
        if series.period_m != model.period_m:
            raise InvalidParameter(
                f"series period {series.period_m} differs from model period {model.period_m}"
            )
        rs = RandomSource(self.seed) if rs is None else rs
        work = log_transform(series) if mode == MULTIPLICATIVE else series
        init_state = initialize_states(work)
        priors = model.default_priors(work)
        posterior = model.log_posterior(work, init_state, priors)
        specs = model.specs()
        start = model.default_init(work)
        try:
            # surfaces data errors, e.g. non-positive LGT observations
            model.filter(work, init_state, model.unpack(start))
        except LevelCollapse:
            pass

        fit = map_fit(posterior, specs, start, self.n_restarts, rs)
        info = {
            "map_log_posterior": fit.log_posterior,
            "map_converged": bool(fit.converged),
            "map_evaluations": int(fit.n_evaluations),
            "map_restart": int(fit.restart_index),
        }
        draws = None
        if self.method == "map":
            points = fit.point[None, :]
        else:
            draws = mcmc_sample(posterior, specs, fit.point, self.n_chains, self.n_warmup,
                                self.n_draws, rs, n_jobs=self.n_jobs)
            points = draws.pooled()
            info["acceptance_rate"] = [float(a) for a in draws.acceptance_rate]

        states = [
            model.filter(work, init_state, model.unpack(row)).final_state() for row in points
        ]
        return FittedModel(
            model=model,
            mode=mode,
            method=self.method,
            init_state=init_state,
            priors=priors,
            points=np.array(points),
            final_states=FinalState.stack(states),
            seed=int(rs.seed),
            data_fingerprint=fingerprint(series.values),
            n_obs=len(series),
            fit_info=info,
            draws=draws,
        )



@dataclass(frozen=True)
class ModelConfig:
    """Everything needed to fit a model to an arbitrary training slice.

    Instances are callable with the backtest forecaster signature
    ``(train, h, future_regressors, rs) -> point forecasts``.
    """

    model: str = "lgt"
    mode: str = ADDITIVE
    global_trend: str = "linear"
    method: str = "map"
    restarts: int = 4
    chains: int = 4
    warmup: int = 1000
    draws: int = 1000
    n_paths: int = 1000

    def build(self, series):
        names = series.regressor_names if self.model == "dlt" else ()
        return build_model(self.model, series.period_m, self.global_trend, names)

    def estimator(self, seed=0, n_jobs=1):
        return Estimator(self.method, self.restarts, self.chains, self.warmup, self.draws,
                         seed=seed, n_jobs=n_jobs)

    def fit(self, series, seed=0, rs=None, n_jobs=1):
        return self.estimator(seed, n_jobs).fit(self.build(series), series, self.mode, rs=rs)

    def __call__(self, train, h, future_regressors, rs):
        fitted = self.fit(train, rs=rs.substream(0))
        return fitted.point_forecast(h, future_regressors, self.n_paths, rs=rs.substream(1))
