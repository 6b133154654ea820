"""Maximum a posteriori fitting in unconstrained coordinates.

The optimizer works on ``u = to_unconstrained(x)`` but maximizes the plain
constrained-space log posterior, without the Jacobian term, so the reported
``log_posterior`` is comparable across parameterizations. Each restart runs
sweeps of L-BFGS-B (central-difference gradients) followed by Nelder-Mead
when the line search gives up, until a sweep improves the posterior by less
than ``rtol`` relative or the evaluation budget runs out. Transformed
coordinates are searched within ``[-U_LIMIT, U_LIMIT]`` so that optima on a
parameter's boundary terminate instead of drifting off to infinity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ..distributions import RandomSource
from ..exceptions import AllRestartsInfeasible, InvalidParameter
from .transforms import check_specs, from_unconstrained, to_unconstrained

FD_STEP = 1e-6
JITTER_SCALE = 0.5
MAP_STREAM = 3
# search box for transformed coordinates; sigmoid(-25) ~ 1e-11
U_LIMIT = 25.0


@dataclass
class MapResult:
    point: np.ndarray
    log_posterior: float
    converged: bool
    n_evaluations: int
    restart_index: int


class _BudgetExhausted(Exception):
    pass


class _Objective:
    """Negative log posterior over ``u`` with an evaluation budget."""

    def __init__(self, posterior, specs, budget):
        self.posterior = posterior
        self.specs = specs
        self.budget = budget
        self.count = 0
        self.best_u = None
        self.best_value = math.inf
        self._last = (None, None)

    def __call__(self, u):
        if self.count >= self.budget:
            raise _BudgetExhausted
        self.count += 1
        value = self.posterior(from_unconstrained(self.specs, u))
        value = -value if math.isfinite(value) else math.inf
        if value < self.best_value:
            self.best_value = value
            self.best_u = np.array(u, dtype=np.float64)
        self._last = (np.array(u, dtype=np.float64), value)
        return value

    def value_at(self, u):
        last_u, last_value = self._last
        if last_u is not None and np.array_equal(last_u, u):
            return last_value
        return self(u)

    def gradient(self, u):
        u = np.asarray(u, dtype=np.float64)
        f0 = self.value_at(u)
        grad = np.zeros_like(u)
        for i in range(len(u)):
            step = np.zeros_like(u)
            step[i] = FD_STEP
            fp = self(u + step)
            fm = self(u - step)
            if math.isfinite(fp) and math.isfinite(fm):
                grad[i] = (fp - fm) / (2 * FD_STEP)
            elif math.isfinite(fp) and math.isfinite(f0):
                grad[i] = (fp - f0) / FD_STEP
            elif math.isfinite(fm) and math.isfinite(f0):
                grad[i] = (f0 - fm) / FD_STEP
        return grad


def _search_bounds(specs):
    return [(None, None) if s.kind == "unbounded" else (-U_LIMIT, U_LIMIT) for s in specs]


def _climb(objective, start, bounds, rtol):
    """Run quasi-Newton/Nelder-Mead sweeps from ``start``; returns the converged flag."""
    lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds])
    hi = np.array([np.inf if b[1] is None else b[1] for b in bounds])
    u = np.clip(np.asarray(start, dtype=np.float64), lo, hi)
    previous = objective(u)
    if not math.isfinite(previous):
        return False
    while True:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = optimize.minimize(
                objective, u, jac=objective.gradient, method="L-BFGS-B", bounds=bounds,
                options={"ftol": rtol, "gtol": 1e-8, "maxiter": 10_000},
            )
            u = objective.best_u
            if not res.success:
                remaining = objective.budget - objective.count
                optimize.minimize(
                    objective, u, method="Nelder-Mead", bounds=bounds,
                    options={"maxfev": max(min(remaining, 200 * len(u)), 1),
                             "xatol": 1e-6,
                             "fatol": rtol * max(abs(objective.best_value), 1e-12),
                             "adaptive": True},
                )
                u = objective.best_u
        current = objective.best_value
        if previous - current <= rtol * max(abs(current), 1e-300):
            return True
        previous = current


def map_fit(posterior, specs, init, n_restarts=4, rs=None, max_evaluations=5000,
            rtol=1e-9) -> MapResult:
    """Maximize ``posterior`` (a log density over constrained vectors).

    The first start is ``init``; restart ``r >= 1`` adds N(0, 0.5^2) jitter in
    unconstrained space drawn from sub-stream ``(3, r)`` of ``rs`` (seed 0
    when omitted), so adding restarts never changes earlier ones. The best
    terminal point wins, ties going to the earliest restart.
    """
    check_specs(specs)
    n_restarts = int(n_restarts)
    if n_restarts < 1:
        raise InvalidParameter(f"n_restarts must be >= 1, got {n_restarts}")
    if rs is None:
        rs = RandomSource(0)
    u0 = to_unconstrained(specs, init)
    bounds = _search_bounds(specs)

    best = None
    total_evals = 0
    for r in range(n_restarts):
        start = u0
        if r > 0:
            jitter = rs.substream(MAP_STREAM, r).generator.standard_normal(len(u0))
            start = u0 + JITTER_SCALE * jitter
        objective = _Objective(posterior, specs, max_evaluations)
        try:
            converged = _climb(objective, start, bounds, rtol)
        except _BudgetExhausted:
            converged = False
        total_evals += objective.count
        if objective.best_u is None or not math.isfinite(objective.best_value):
            continue
        value = -float(objective.best_value)
        if best is None or value > best.log_posterior:
            best = MapResult(
                point=from_unconstrained(specs, objective.best_u),
                log_posterior=value,
                converged=converged,
                n_evaluations=0,
                restart_index=r,
            )
    if best is None:
        raise AllRestartsInfeasible(
            f"log posterior was -inf at every one of {n_restarts} starting points"
        )
    best.n_evaluations = total_evals
    return best
