"""Local and Global Trend (LGT) model.

One-step mean and observation::

    mu_t = l_{t-1} + xi1 * b_{t-1} + xi2 * l_{t-1} ** lam
    y_t  = mu_t + s_t + eps_t,        eps_t ~ Student-t(nu, 0, sigma)

State updates::

    l_t     = rho_l * (y_t - s_t) + (1 - rho_l) * l_{t-1}
    b_t     = rho_b * (l_t - l_{t-1}) + (1 - rho_b) * b_{t-1}
    s_{t+m} = rho_s * (y_t - l_t) + (1 - rho_s) * s_t

Levels must stay strictly positive, so observations must be positive too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import halfcauchy_logpdf, studentt_logpdf_sum
from .exceptions import InvalidParameter, LevelCollapse, NonPositiveObservation
from .forecast import FilterResult, FinalState, run_paths
from .series import InitialState, TimeSeries

NU_BOUNDS = (2.0, 40.0)


@dataclass(frozen=True)
class LgtParams:
    rho_l: float
    rho_b: float
    rho_s: float = 0.5  # ignored when period_m == 1
    xi1: float = 0.0
    xi2: float = 0.0
    lam: float = 0.5
    nu: float = 10.0
    sigma: float = 1.0

    def validate(self):
        for name in ("rho_l", "rho_b", "rho_s"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise InvalidParameter(f"{name} must lie in (0, 1), got {value!r}")
        for name in ("xi1", "lam"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParameter(f"{name} must lie in [0, 1], got {value!r}")
        if not math.isfinite(self.xi2):
            raise InvalidParameter(f"xi2 must be finite, got {self.xi2!r}")
        if not NU_BOUNDS[0] <= self.nu <= NU_BOUNDS[1]:
            raise InvalidParameter(f"nu must lie in {list(NU_BOUNDS)}, got {self.nu!r}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise InvalidParameter(f"sigma must be positive, got {self.sigma!r}")
        return self


@dataclass(frozen=True)
class LgtPriors:
    gamma0: float

    def __post_init__(self):
        if not self.gamma0 > 0:
            raise InvalidParameter(f"gamma0 must be positive, got {self.gamma0!r}")


def default_gamma0(values):
    """Half-Cauchy scale for sigma: 0.3 sample standard deviations, floored at 0.01."""
    values = np.asarray(values, dtype=np.float64)
    sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return max(0.01, 0.3 * sd)


def lgt_filter(series: TimeSeries, init: InitialState, params: LgtParams) -> FilterResult:
    """Run the LGT recursion over the series and score the one-step residuals."""
    params.validate()
    y = series.values
    nonpositive = np.flatnonzero(y <= 0)
    if nonpositive.size:
        i = int(nonpositive[0])
        raise NonPositiveObservation(
            f"LGT requires y_t > 0; got {y[i]!r} at index {i}", index=i
        )
    if not init.level_0 > 0:
        raise LevelCollapse(f"initial level must be positive, got {init.level_0!r}", index=-1)

    m = series.period_m
    seasonal_on = m > 1
    rho_l, rho_b, rho_s = params.rho_l, params.rho_b, params.rho_s
    xi1, xi2, lam = params.xi1, params.xi2, params.lam
    ring = [float(v) for v in init.seasonal_0] if seasonal_on else None

    n = len(y)
    levels = [0.0] * n
    trends = [0.0] * n
    seas = [0.0] * n
    means = [0.0] * n
    resid = [0.0] * n
    level = float(init.level_0)
    trend = float(init.trend_0)
    for t, yt in enumerate(y.tolist()):
        s = ring[t % m] if seasonal_on else 0.0
        mu = level + xi1 * trend + xi2 * level**lam
        new_level = rho_l * (yt - s) + (1.0 - rho_l) * level
        if not new_level > 0:
            raise LevelCollapse(f"level collapsed to {new_level!r} at index {t}", index=t)
        trend = rho_b * (new_level - level) + (1.0 - rho_b) * trend
        if seasonal_on:
            ring[t % m] = rho_s * (yt - new_level) + (1.0 - rho_s) * s
        level = new_level
        levels[t] = level
        trends[t] = trend
        seas[t] = s
        means[t] = mu
        resid[t] = yt - mu - s

    if seasonal_on:
        next_seasonal = np.array([ring[(n + k) % m] for k in range(m)])
    else:
        next_seasonal = np.zeros(1)
    residuals = np.array(resid)
    if np.all(np.isfinite(residuals)):
        loglik = studentt_logpdf_sum(residuals, params.nu, params.sigma)
    else:
        loglik = -math.inf
    zeros = np.zeros(n)
    return FilterResult(
        levels=np.array(levels),
        trends=np.array(trends),
        seasonal=np.array(seas),
        one_step_means=np.array(means),
        residuals=residuals,
        log_likelihood=loglik,
        next_seasonal=next_seasonal,
        global_trend=zeros,
        regression=zeros,
    )


def lgt_log_posterior(series, init, params: LgtParams, priors: LgtPriors) -> float:
    """Filter log-likelihood plus the Half-Cauchy prior on sigma.

    The remaining parameters carry flat priors over their boxes and so add
    nothing. A collapsed level makes the point infeasible: ``-inf``.
    """
    params.validate()
    try:
        result = lgt_filter(series, init, params)
    except LevelCollapse:
        return -math.inf
    value = result.log_likelihood + halfcauchy_logpdf(params.sigma, priors.gamma0)
    return value if math.isfinite(value) else -math.inf


def _param_arrays(params):
    if isinstance(params, LgtParams):
        params = [params]
    for p in params:
        p.validate()
    return {
        name: np.array([getattr(p, name) for p in params])
        for name in ("rho_l", "rho_b", "rho_s", "xi1", "xi2", "lam", "nu", "sigma")
    }


def lgt_forecast(final_state: FinalState, params, h, n_paths=1, rs=None,
                 mode="stochastic", n_jobs=1):
    """Simulate future paths by feeding simulated observations back into the updates.

    ``params`` is one :class:`LgtParams` or a sequence aligned with the rows
    of ``final_state`` (for posterior draws); path ``p`` uses row
    ``p % len(final_state)``. Paths whose level collapses are redrawn.
    """
    p = _param_arrays(params)
    n_sets = len(final_state)
    if len(p["nu"]) != n_sets:
        raise InvalidParameter(
            f"{len(p['nu'])} parameter sets for {n_sets} final states"
        )
    m = final_state.period_m

    def propagate(idx, noise):
        rho_l, rho_b, rho_s = p["rho_l"][idx], p["rho_b"][idx], p["rho_s"][idx]
        xi1, xi2, lam = p["xi1"][idx], p["xi2"][idx], p["lam"][idx]
        level = final_state.level[idx].copy()
        trend = final_state.trend[idx].copy()
        ring = final_state.seasonal[idx].copy()
        k, steps = noise.shape
        out = np.empty((k, steps))
        ok = np.ones(k, dtype=bool)
        with np.errstate(invalid="ignore", over="ignore"):
            for j in range(steps):
                slot = j % m
                s = ring[:, slot] if m > 1 else 0.0
                mu = level + xi1 * trend + xi2 * np.where(ok, level, 1.0) ** lam
                y = mu + s + noise[:, j]
                new_level = rho_l * (y - s) + (1.0 - rho_l) * level
                ok &= new_level > 0
                trend = rho_b * (new_level - level) + (1.0 - rho_b) * trend
                if m > 1:
                    ring[:, slot] = rho_s * (y - new_level) + (1.0 - rho_s) * s
                level = new_level
                out[:, j] = y
        ok &= np.all(np.isfinite(out), axis=1)
        return out, ok

    if rs is None and mode != "deterministic":
        raise InvalidParameter("stochastic forecasts need a RandomSource")
    return run_paths(propagate, n_sets, p["nu"], p["sigma"], h, n_paths, rs, mode, n_jobs)
