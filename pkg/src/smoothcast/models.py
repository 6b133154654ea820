"""Model adapters: flat parameter vectors, priors and defaults for LGT and DLT.

An adapter knows how to turn the optimizer's flat vector into a typed
parameter object, which bounds each coordinate has, and how to filter and
forecast. The estimator drives inference through this interface without
knowing which model it is fitting.
"""

from __future__ import annotations

import math

import numpy as np

from .dlt import (
    TREND_ARITY,
    DltParams,
    DltPriors,
    RegressionPrior,
    _trend_kind,
    dlt_filter,
    dlt_forecast,
    dlt_log_posterior,
)
from .exceptions import InvalidParameter
from .inference.transforms import make_specs
from .lgt import (
    NU_BOUNDS,
    LgtParams,
    LgtPriors,
    default_gamma0,
    lgt_filter,
    lgt_forecast,
    lgt_log_posterior,
)


def _sigma_guess(values):
    y = np.asarray(values, dtype=np.float64)
    spread = float(np.std(np.diff(y))) if len(y) > 2 else 0.0
    scale = float(np.max(np.abs(y))) if len(y) else 0.0
    return max(spread, 1e-3 * scale, 1e-6)


class LgtModel:
    kind = "lgt"

    def __init__(self, period_m=1):
        self.period_m = int(period_m)

    @property
    def has_seasonality(self):
        return self.period_m > 1

    def param_names(self):
        names = ["rho_l", "rho_b", "rho_s", "xi1", "xi2", "lam", "nu", "sigma"]
        if not self.has_seasonality:
            names.remove("rho_s")
        return names

    def specs(self):
        bounds = {
            "rho_l": ("unit",), "rho_b": ("unit",), "rho_s": ("unit",),
            "xi1": ("unit",), "xi2": ("unbounded",), "lam": ("unit",),
            "nu": ("box", *NU_BOUNDS), "sigma": ("positive",),
        }
        return make_specs([(name, *bounds[name]) for name in self.param_names()])

    def unpack(self, vector):
        values = dict(zip(self.param_names(), (float(v) for v in vector)))
        return LgtParams(**values)

    def pack(self, params):
        return np.array([getattr(params, name) for name in self.param_names()])

    def default_init(self, series):
        return self.pack(LgtParams(
            rho_l=0.5, rho_b=0.1, rho_s=0.2, xi1=0.5, xi2=0.0, lam=0.5,
            nu=10.0, sigma=_sigma_guess(series.values),
        ))

    def default_priors(self, series):
        return LgtPriors(gamma0=default_gamma0(series.values))

    def log_posterior(self, series, init_state, priors):
        if series.n_regressors:
            raise InvalidParameter("the LGT model takes no regressors")

        def fn(vector):
            try:
                return lgt_log_posterior(series, init_state, self.unpack(vector), priors)
            except InvalidParameter:
                return -math.inf

        return fn

    def filter(self, series, init_state, params):
        return lgt_filter(series, init_state, params)

    def forecast(self, final_state, params, h, n_paths, rs, mode, future_regressors=None,
                 n_jobs=1):
        return lgt_forecast(final_state, params, h, n_paths, rs, mode, n_jobs)

    def config(self):
        return {"kind": self.kind, "period_m": self.period_m}


class DltModel:
    kind = "dlt"

    def __init__(self, period_m=1, global_trend="linear", regressor_names=()):
        self.period_m = int(period_m)
        self.global_trend = _trend_kind(global_trend)
        self.regressor_names = tuple(regressor_names)

    @property
    def has_seasonality(self):
        return self.period_m > 1

    @property
    def n_regressors(self):
        return len(self.regressor_names)

    @property
    def n_trend(self):
        return TREND_ARITY[self.global_trend]

    def param_names(self):
        names = ["rho_l", "rho_b", "rho_s", "theta", "nu", "sigma"]
        if not self.has_seasonality:
            names.remove("rho_s")
        names += [f"beta[{name}]" for name in self.regressor_names]
        names += [f"trend[{k}]" for k in range(self.n_trend)]
        return names

    def specs(self):
        entries = []
        for name in self.param_names():
            if name in ("rho_l", "rho_b", "rho_s", "theta"):
                entries.append((name, "unit"))
            elif name == "nu":
                entries.append((name, "box", *NU_BOUNDS))
            elif name == "sigma":
                entries.append((name, "positive"))
            else:
                entries.append((name, "unbounded"))
        return make_specs(entries)

    def unpack(self, vector):
        vector = [float(v) for v in vector]
        n_core = 6 if self.has_seasonality else 5
        core = dict(zip(self.param_names()[:n_core], vector[:n_core]))
        beta = vector[n_core : n_core + self.n_regressors]
        trend = vector[n_core + self.n_regressors :]
        return DltParams(beta=tuple(beta), trend_coeffs=tuple(trend), **core)

    def pack(self, params):
        n_core = 6 if self.has_seasonality else 5
        core = [getattr(params, name) for name in self.param_names()[:n_core]]
        return np.array(core + list(params.beta) + list(params.trend_coeffs))

    def default_trend(self, series):
        if self.global_trend == "logistic":
            return (0.0, 0.1, len(series) / 2.0)
        return (0.0,) * self.n_trend

    def default_init(self, series):
        return self.pack(DltParams(
            rho_l=0.5, rho_b=0.1, rho_s=0.2, theta=0.8,
            beta=(0.0,) * self.n_regressors, trend_coeffs=self.default_trend(series),
            nu=10.0, sigma=_sigma_guess(series.values),
        ))

    def default_priors(self, series):
        return DltPriors(
            gamma0=default_gamma0(series.values),
            regression=RegressionPrior.default(self.n_regressors),
        )

    def log_posterior(self, series, init_state, priors):
        if series.regressor_names != self.regressor_names:
            raise InvalidParameter(
                f"model expects regressors {self.regressor_names}, "
                f"series has {series.regressor_names}"
            )

        def fn(vector):
            try:
                return dlt_log_posterior(
                    series, init_state, self.unpack(vector), self.global_trend, priors
                )
            except InvalidParameter:
                return -math.inf

        return fn

    def filter(self, series, init_state, params):
        return dlt_filter(series, init_state, params, self.global_trend)

    def forecast(self, final_state, params, h, n_paths, rs, mode, future_regressors=None,
                 n_jobs=1):
        return dlt_forecast(final_state, params, self.global_trend, future_regressors,
                            h, n_paths, rs, mode, n_jobs)

    def config(self):
        return {
            "kind": self.kind,
            "period_m": self.period_m,
            "global_trend": self.global_trend,
            "regressor_names": list(self.regressor_names),
        }


def build_model(kind, period_m=1, global_trend="linear", regressor_names=()):
    if kind == "lgt":
        if regressor_names:
            raise InvalidParameter("the LGT model takes no regressors")
        return LgtModel(period_m)
    if kind == "dlt":
        return DltModel(period_m, global_trend, regressor_names)
    raise InvalidParameter(f"unknown model kind {kind!r}; choose lgt or dlt")


def model_from_config(config):
    return build_model(
        config["kind"],
        config["period_m"],
        config.get("global_trend", "linear"),
        tuple(config.get("regressor_names", ())),
    )
