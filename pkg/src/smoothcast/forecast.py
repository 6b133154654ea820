"""Filter output containers and the forecast path driver shared by both models."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import RandomSource, studentt_sample
from .exceptions import InvalidParameter, PathInfeasible

DETERMINISTIC = "deterministic"
STOCHASTIC = "stochastic"

# Paths are simulated in fixed-size blocks so the arithmetic is identical no
# matter how many worker threads share the blocks.
PATH_BLOCK = 256
MAX_PATH_RETRIES = 100


@dataclass(frozen=True)
class FilterResult:
    """Per-step output of a model filter over the training data.

    ``seasonal[t]`` is the index consumed at step ``t`` and ``next_seasonal``
    holds the indices for the ``period_m`` steps after the data ends.
    ``global_trend`` and ``regression`` are zero for models without them.
    """

    levels: np.ndarray
    trends: np.ndarray
    seasonal: np.ndarray
    one_step_means: np.ndarray
    residuals: np.ndarray
    log_likelihood: float
    next_seasonal: np.ndarray
    global_trend: np.ndarray = field(default=None)
    regression: np.ndarray = field(default=None)

    def final_state(self):
        return FinalState.single(
            self.levels[-1], self.trends[-1], self.next_seasonal, len(self.levels)
        )


@dataclass(frozen=True)
class FinalState:
    """End-of-data states for one or more parameter sets.

    ``level`` and ``trend`` have shape ``(k,)`` and ``seasonal`` ``(k, m)``;
    ``t_end`` is the number of training observations.
    """

    level: np.ndarray
    trend: np.ndarray
    seasonal: np.ndarray
    t_end: int

    @classmethod
    def single(cls, level, trend, seasonal, t_end):
        return cls(
            level=np.array([level], dtype=np.float64),
            trend=np.array([trend], dtype=np.float64),
            seasonal=np.asarray(seasonal, dtype=np.float64).reshape(1, -1),
            t_end=int(t_end),
        )

    @classmethod
    def stack(cls, states):
        t_end = {s.t_end for s in states}
        if len(t_end) != 1:
            raise InvalidParameter("cannot stack final states with different t_end")
        return cls(
            level=np.concatenate([s.level for s in states]),
            trend=np.concatenate([s.trend for s in states]),
            seasonal=np.concatenate([s.seasonal for s in states]),
            t_end=t_end.pop(),
        )

    def __len__(self):
        return len(self.level)

    @property
    def period_m(self):
        return self.seasonal.shape[1]


class ForecastDistribution:
    """Simulated forecast paths, shape ``(n_paths, h)``."""

    def __init__(self, paths):
        self.paths = np.asarray(paths, dtype=np.float64)

    @property
    def horizon(self):
        return self.paths.shape[1]

    @property
    def n_paths(self):
        return self.paths.shape[0]

    @property
    def mean(self):
        return self.paths.mean(axis=0)

    @property
    def median(self):
        return np.median(self.paths, axis=0)

    def quantiles(self, levels):
        """Array of shape ``(h, len(levels))``; non-decreasing along axis 1."""
        levels = np.asarray(levels, dtype=np.float64)
        if np.any((levels < 0) | (levels > 1)):
            raise InvalidParameter(f"quantile levels must lie in [0, 1], got {levels}")
        return np.quantile(self.paths, levels, axis=0).T

    def map(self, fn):
        return ForecastDistribution(fn(self.paths))


def _draw_noise(rs, path_ids, retry, nu, sigma, h):
    noise = np.empty((len(path_ids), h))
    for row, p in enumerate(path_ids):
        stream = rs.substream(p, retry)
        noise[row] = studentt_sample(stream, nu[row], 0.0, sigma[row], h)
    return noise


def run_paths(propagate, n_sets, nu, sigma, h, n_paths, rs, mode, n_jobs=1):
    """Drive ``propagate`` over simulated noise and collect the paths.

    ``propagate(set_index, noise)`` simulates one path per row of ``noise``
    using the parameter set / final state selected by ``set_index`` and
    returns ``(paths, ok)``, where ``ok`` flags paths that stayed feasible.
    Path ``p`` uses parameter set ``p % n_sets`` and the noise sub-stream
    ``(p, retry)``; infeasible paths are redrawn from a fresh sub-stream up to
    ``MAX_PATH_RETRIES`` times.

    In deterministic mode the noise is zero and one path per parameter set is
    returned.
    """
    h = int(h)
    if h < 1:
        raise InvalidParameter(f"horizon must be >= 1, got {h}")
    nu = np.asarray(nu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)

    if mode == DETERMINISTIC:
        idx = np.arange(n_sets)
        paths, ok = propagate(idx, np.zeros((n_sets, h)))
        if not np.all(ok):
            raise PathInfeasible("zero-noise forecast path left the feasible region")
        return ForecastDistribution(paths)
    if mode != STOCHASTIC:
        raise InvalidParameter(f"unknown forecast mode {mode!r}")
    if int(n_paths) < 1:
        raise InvalidParameter(f"n_paths must be >= 1, got {n_paths}")

    def block(start):
        path_ids = np.arange(start, min(start + PATH_BLOCK, n_paths))
        set_idx = path_ids % n_sets
        noise = _draw_noise(rs, path_ids, 0, nu[set_idx], sigma[set_idx], h)
        paths, ok = propagate(set_idx, noise)
        retry = 0
        while not np.all(ok):
            retry += 1
            if retry > MAX_PATH_RETRIES:
                raise PathInfeasible(
                    f"{int(np.sum(~ok))} forecast paths stayed infeasible after "
                    f"{MAX_PATH_RETRIES} redraws"
                )
            bad = np.flatnonzero(~ok)
            redo = _draw_noise(rs, path_ids[bad], retry, nu[set_idx[bad]], sigma[set_idx[bad]], h)
            new_paths, new_ok = propagate(set_idx[bad], redo)
            paths[bad] = new_paths
            ok[bad] = new_ok
        return paths

    starts = range(0, int(n_paths), PATH_BLOCK)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            blocks = list(pool.map(block, starts))
    else:
        blocks = [block(s) for s in starts]
    return ForecastDistribution(np.concatenate(blocks, axis=0))
