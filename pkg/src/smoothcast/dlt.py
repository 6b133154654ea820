"""Damped Local Trend (DLT) model with a deterministic global trend and regressors.

One-step mean and observation::

    g_t  = D(t)
    r_t  = sum_j beta_j * x_{jt}
    mu_t = g_t + l_{t-1} + theta * b_{t-1}
    y_t  = mu_t + s_t + r_t + eps_t,   eps_t ~ Student-t(nu, 0, sigma)

State updates::

    l_t     = rho_l * (y_t - g_t - s_t - r_t) + (1 - rho_l) * (l_{t-1} + b_{t-1})
    b_t     = rho_b * (l_t - l_{t-1}) + (1 - rho_b) * theta * b_{t-1}
    s_{t+m} = rho_s * (y_t - g_t - l_t - r_t) + (1 - rho_s) * s_t

The seasonal update removes ``g_t`` alongside the level and regression so
that the seasonal indices only see what the other components leave over.
Time ``t`` runs 1..T over the training data and continues T+1.. when
forecasting. Observations may take any sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import halfcauchy_logpdf, normal_logpdf, studentt_logpdf_sum
from .exceptions import ArityMismatch, InvalidParameter, RegressorMissing
from .forecast import FilterResult, FinalState, run_paths
from .lgt import NU_BOUNDS
from .series import InitialState, TimeSeries

TREND_ARITY = {"flat": 1, "linear": 2, "loglinear": 2, "logistic": 3}
TREND_PRIOR_SD = 10.0


def _trend_kind(kind):
    kind = kind.replace("-", "").replace("_", "").lower()
    if kind not in TREND_ARITY:
        raise InvalidParameter(
            f"unknown global trend {kind!r}; choose from {sorted(TREND_ARITY)}"
        )
    return kind


@dataclass(frozen=True)
class GlobalTrend:
    """Deterministic global trend ``D(t)``.

    ========== ===================== =========================================
    kind       coefficients          D(t)
    ========== ===================== =========================================
    flat       (d0,)                 d0
    linear     (d0, d1)              d0 + d1 * t
    loglinear  (d0, d1)              d0 + d1 * ln(t + 1)
    logistic   (cap, rate, midpoint) cap / (1 + exp(-rate * (t - midpoint)))
    ========== ===================== =========================================
    """

    kind: str
    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "kind", _trend_kind(self.kind))
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if len(self.coeffs) != TREND_ARITY[self.kind]:
            raise ArityMismatch(
                f"{self.kind} trend takes {TREND_ARITY[self.kind]} coefficients, "
                f"got {len(self.coeffs)}"
            )


def global_trend_eval(trend: GlobalTrend, t):
    """Evaluate ``D(t)`` for a scalar or array of 1-based time indices."""
    c = trend.coeffs
    t = np.asarray(t, dtype=np.float64)
    if trend.kind == "flat":
        out = np.full_like(t, c[0])
    elif trend.kind == "linear":
        out = c[0] + c[1] * t
    elif trend.kind == "loglinear":
        out = c[0] + c[1] * np.log(t + 1.0)
    else:
        with np.errstate(over="ignore"):
            out = c[0] / (1.0 + np.exp(-c[1] * (t - c[2])))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DltParams:
    rho_l: float
    rho_b: float
    rho_s: float = 0.5  # ignored when period_m == 1
    theta: float = 0.8
    beta: tuple = ()
    trend_coeffs: tuple = (0.0,)
    nu: float = 10.0
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "trend_coeffs", tuple(float(d) for d in self.trend_coeffs))

    def validate(self):
        for name in ("rho_l", "rho_b", "rho_s"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise InvalidParameter(f"{name} must lie in (0, 1), got {value!r}")
        if not 0.0 <= self.theta <= 1.0:
            raise InvalidParameter(f"theta must lie in [0, 1], got {self.theta!r}")
        if not all(math.isfinite(v) for v in self.beta + self.trend_coeffs):
            raise InvalidParameter("beta and trend coefficients must be finite")
        if not NU_BOUNDS[0] <= self.nu <= NU_BOUNDS[1]:
            raise InvalidParameter(f"nu must lie in {list(NU_BOUNDS)}, got {self.nu!r}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise InvalidParameter(f"sigma must be positive, got {self.sigma!r}")
        return self


@dataclass(frozen=True)
class RegressionPrior:
    """Independent Normal priors on the regression coefficients."""

    mu: tuple = ()
    sigma: tuple = ()

    @classmethod
    def default(cls, n_regressors):
        return cls(mu=(0.0,) * n_regressors, sigma=(1.0,) * n_regressors)

    def __post_init__(self):
        if len(self.mu) != len(self.sigma):
            raise InvalidParameter("regression prior means and scales differ in length")
        if not all(s > 0 for s in self.sigma):
            raise InvalidParameter("regression prior scales must be positive")


@dataclass(frozen=True)
class DltPriors:
    gamma0: float
    regression: RegressionPrior = field(default_factory=RegressionPrior)
    trend_sd: float = TREND_PRIOR_SD

    def __post_init__(self):
        if not self.gamma0 > 0:
            raise InvalidParameter(f"gamma0 must be positive, got {self.gamma0!r}")


def _check_regressors(n_beta, matrix, what):
    n_cols = matrix.shape[1] if matrix is not None else 0
    if n_beta == n_cols:
        return
    if n_cols == 0:
        raise RegressorMissing(f"{n_beta} regression coefficients but {what} has no regressors")
    raise RegressorMissing(f"{n_beta} regression coefficients for {n_cols} regressors in {what}")


def dlt_filter(series: TimeSeries, init: InitialState, params: DltParams, kind) -> FilterResult:
    """Run the DLT recursion and score the one-step residuals."""
    params.validate()
    trend = GlobalTrend(kind, params.trend_coeffs)
    _check_regressors(len(params.beta), series.regressors, "the series")
    y = series.values
    n = len(y)
    m = series.period_m
    seasonal_on = m > 1
    rho_l, rho_b, rho_s, theta = params.rho_l, params.rho_b, params.rho_s, params.theta

    g_all = global_trend_eval(trend, np.arange(1, n + 1)).tolist()
    if params.beta:
        r_all = (series.regressors @ np.array(params.beta)).tolist()
    else:
        r_all = [0.0] * n
    ring = [float(v) for v in init.seasonal_0] if seasonal_on else None

    levels = [0.0] * n
    trends = [0.0] * n
    seas = [0.0] * n
    means = [0.0] * n
    resid = [0.0] * n
    level = float(init.level_0)
    slope = float(init.trend_0)
    for t, yt in enumerate(y.tolist()):
        g = g_all[t]
        r = r_all[t]
        s = ring[t % m] if seasonal_on else 0.0
        mu = g + level + theta * slope
        new_level = rho_l * (yt - g - s - r) + (1.0 - rho_l) * (level + slope)
        slope = rho_b * (new_level - level) + (1.0 - rho_b) * theta * slope
        if seasonal_on:
            ring[t % m] = rho_s * (yt - g - new_level - r) + (1.0 - rho_s) * s
        level = new_level
        levels[t] = level
        trends[t] = slope
        seas[t] = s
        means[t] = mu
        resid[t] = yt - mu - s - r

    if seasonal_on:
        next_seasonal = np.array([ring[(n + k) % m] for k in range(m)])
    else:
        next_seasonal = np.zeros(1)
    residuals = np.array(resid)
    if np.all(np.isfinite(residuals)):
        loglik = studentt_logpdf_sum(residuals, params.nu, params.sigma)
    else:
        loglik = -math.inf
    return FilterResult(
        levels=np.array(levels),
        trends=np.array(trends),
        seasonal=np.array(seas),
        one_step_means=np.array(means),
        residuals=residuals,
        log_likelihood=loglik,
        next_seasonal=next_seasonal,
        global_trend=np.array(g_all),
        regression=np.array(r_all),
    )


def dlt_log_prior(params: DltParams, priors: DltPriors) -> float:
    reg = priors.regression
    if len(reg.mu) != len(params.beta):
        raise InvalidParameter(
            f"regression prior has {len(reg.mu)} entries for {len(params.beta)} coefficients"
        )
    total = halfcauchy_logpdf(params.sigma, priors.gamma0)
    for b, mu, sd in zip(params.beta, reg.mu, reg.sigma):
        total += normal_logpdf(b, mu, sd)
    for d in params.trend_coeffs:
        total += normal_logpdf(d, 0.0, priors.trend_sd)
    return total


def dlt_log_posterior(series, init, params: DltParams, kind, priors: DltPriors) -> float:
    """Filter log-likelihood plus priors.

    sigma ~ Half-Cauchy(gamma0), beta_j ~ Normal(mu_j, sigma_j) and each
    global-trend coefficient ~ Normal(0, trend_sd); the smoothing parameters,
    theta and nu are flat over their boxes.
    """
    result = dlt_filter(series, init, params, kind)
    value = result.log_likelihood + dlt_log_prior(params, priors)
    return value if math.isfinite(value) else -math.inf


def _param_arrays(params):
    if isinstance(params, DltParams):
        params = [params]
    for p in params:
        p.validate()
    out = {
        name: np.array([getattr(p, name) for p in params])
        for name in ("rho_l", "rho_b", "rho_s", "theta", "nu", "sigma")
    }
    out["beta"] = np.array([p.beta for p in params]).reshape(len(params), -1)
    out["trend"] = [p.trend_coeffs for p in params]
    return out


def dlt_forecast(final_state: FinalState, params, kind, future_regressors, h,
                 n_paths=1, rs=None, mode="stochastic", n_jobs=1):
    """Simulate future paths with the DLT equations.

    ``future_regressors`` needs at least ``h`` rows when the model has
    regression coefficients; the global trend is evaluated at T+1..T+h.
    """
    p = _param_arrays(params)
    n_sets = len(final_state)
    if len(p["nu"]) != n_sets:
        raise InvalidParameter(f"{len(p['nu'])} parameter sets for {n_sets} final states")
    h = int(h)
    n_beta = p["beta"].shape[1]
    if n_beta:
        x = np.zeros((0, 0)) if future_regressors is None else np.asarray(
            future_regressors, dtype=np.float64
        )
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[0] < h or x.shape[1] != n_beta:
            raise RegressorMissing(
                f"forecasting {h} steps needs future regressors of shape ({h}, {n_beta}), "
                f"got {x.shape}"
            )
        regression = p["beta"] @ x[:h].T  # (n_sets, h)
    else:
        regression = np.zeros((n_sets, h))
    future_t = np.arange(final_state.t_end + 1, final_state.t_end + h + 1)
    g_sets = np.array([global_trend_eval(GlobalTrend(kind, c), future_t) for c in p["trend"]])
    m = final_state.period_m

    def propagate(idx, noise):
        rho_l, rho_b, rho_s = p["rho_l"][idx], p["rho_b"][idx], p["rho_s"][idx]
        theta = p["theta"][idx]
        g, r = g_sets[idx], regression[idx]
        level = final_state.level[idx].copy()
        slope = final_state.trend[idx].copy()
        ring = final_state.seasonal[idx].copy()
        k, steps = noise.shape
        out = np.empty((k, steps))
        with np.errstate(invalid="ignore", over="ignore"):
            for j in range(steps):
                slot = j % m
                s = ring[:, slot] if m > 1 else 0.0
                y = g[:, j] + level + theta * slope + s + r[:, j] + noise[:, j]
                new_level = rho_l * (y - g[:, j] - s - r[:, j]) + (1.0 - rho_l) * (level + slope)
                slope = rho_b * (new_level - level) + (1.0 - rho_b) * theta * slope
                if m > 1:
                    ring[:, slot] = rho_s * (y - g[:, j] - new_level - r[:, j]) + (1.0 - rho_s) * s
                level = new_level
                out[:, j] = y
        return out, np.all(np.isfinite(out), axis=1)

    if rs is None and mode != "deterministic":
        raise InvalidParameter("stochastic forecasts need a RandomSource")
    return run_paths(propagate, n_sets, p["nu"], p["sigma"], h, n_paths, rs, mode, n_jobs)
