"""Adaptive random-walk Metropolis in unconstrained coordinates.

The target is ``log p(x(u)) + log |dx/du|``. During warmup the proposal
covariance is re-estimated at the end of a series of doubling windows and a
global scale is tuned by Robbins-Monro toward the target acceptance rate.
After warmup the kernel is frozen, so the retained draws come from a fixed
Metropolis kernel that leaves the target invariant.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..distributions import RandomSource
from ..exceptions import ChainStuck, InvalidParameter
from .transforms import check_specs, from_unconstrained, log_jacobian, to_unconstrained

MCMC_STREAM = 2
MIN_ACCEPTANCE = 0.01
INIT_BUFFER = 75
TERM_BUFFER = 50
FIRST_WINDOW = 25


@dataclass
class PosteriorDraws:
    """Retained draws, shape ``(chains, iterations, parameters)``, constrained space."""

    draws: np.ndarray
    acceptance_rate: np.ndarray
    n_warmup: int
    names: tuple = ()
    log_posterior: np.ndarray = None

    @property
    def n_chains(self):
        return self.draws.shape[0]

    @property
    def n_iterations(self):
        return self.draws.shape[1]

    def pooled(self):
        return self.draws.reshape(-1, self.draws.shape[2])

    def parameter(self, name):
        return self.draws[:, :, self.names.index(name)]


def _windows(n_warmup):
    """End points (exclusive) of covariance-adaptation windows."""
    if n_warmup < INIT_BUFFER + FIRST_WINDOW + TERM_BUFFER:
        return []
    ends = []
    start = INIT_BUFFER
    size = FIRST_WINDOW
    last = n_warmup - TERM_BUFFER
    while start < last:
        end = start + size
        if end + 2 * size > last:
            end = last
        ends.append(end)
        start = end
        size *= 2
    return ends


def _target_acceptance(dim):
    return 0.44 if dim == 1 else 0.3


def _run_chain(log_target, u_start, n_warmup, n_draws, rs):
    gen = rs.generator
    dim = len(u_start)
    target = _target_acceptance(dim)
    base_scale = 2.38 / math.sqrt(dim)
    log_scale = math.log(0.1 * base_scale)
    chol = np.eye(dim)
    window_ends = set(_windows(n_warmup))
    window_start = 0
    rm_step = 0

    u = np.array(u_start, dtype=np.float64)
    lp = log_target(u)
    history = np.empty((n_warmup, dim))
    draws = np.empty((n_draws, dim))
    lps = np.empty(n_draws)
    accepted = 0
    for it in range(n_warmup + n_draws):
        proposal = u + math.exp(log_scale) * (chol @ gen.standard_normal(dim))
        lp_new = log_target(proposal)
        log_ratio = lp_new - lp if math.isfinite(lp_new) else -math.inf
        accept_prob = math.exp(min(0.0, log_ratio))
        if gen.random() < accept_prob:
            u, lp = proposal, lp_new
            if it >= n_warmup:
                accepted += 1
        if it < n_warmup:
            history[it] = u
            rm_step += 1
            log_scale += rm_step ** -0.6 * (accept_prob - target)
            if it + 1 in window_ends:
                window = history[window_start : it + 1]
                n = len(window)
                cov = np.cov(window, rowvar=False).reshape(dim, dim)
                cov = (n / (n + 5.0)) * cov + 1e-3 * (5.0 / (n + 5.0)) * np.eye(dim)
                try:
                    chol = np.linalg.cholesky(cov)
                    log_scale = math.log(base_scale)
                except np.linalg.LinAlgError:
                    pass
                rm_step = 0
                window_start = it + 1
        else:
            draws[it - n_warmup] = u
            lps[it - n_warmup] = lp
    rate = accepted / n_draws if n_draws else 0.0
    return draws, lps, rate


def mcmc_sample(posterior, specs, init, n_chains=4, n_warmup=1000, n_draws=1000,
                rs=None, n_jobs=1) -> PosteriorDraws:
    """Draw from ``posterior`` (log density over constrained vectors).

    Chain ``c`` uses sub-stream ``(2, c)`` of ``rs`` and starts from ``init``
    plus small jitter in unconstrained space (plain ``init`` if the jittered
    point is infeasible). Chains may run on ``n_jobs`` threads without
    changing the result.
    """
    check_specs(specs)
    n_chains, n_warmup, n_draws = int(n_chains), int(n_warmup), int(n_draws)
    if n_chains < 1 or n_draws < 1 or n_warmup < 0:
        raise InvalidParameter("need n_chains >= 1, n_draws >= 1 and n_warmup >= 0")
    if rs is None:
        rs = RandomSource(0)
    u0 = to_unconstrained(specs, init)

    def log_target(u):
        value = posterior(from_unconstrained(specs, u))
        if not math.isfinite(value):
            return -math.inf
        return value + log_jacobian(specs, u)

    if not math.isfinite(log_target(u0)):
        raise InvalidParameter("log posterior must be finite at the initial point")

    def chain(c):
        stream = rs.substream(MCMC_STREAM, c)
        start = u0 + 0.1 * stream.substream(0).generator.standard_normal(len(u0))
        if not math.isfinite(log_target(start)):
            start = u0
        return _run_chain(log_target, start, n_warmup, n_draws, stream.substream(1))

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(chain, range(n_chains)))
    else:
        results = [chain(c) for c in range(n_chains)]

    rates = np.array([r[2] for r in results])
    if np.any(rates < MIN_ACCEPTANCE):
        c = int(np.argmin(rates))
        raise ChainStuck(
            f"chain {c} accepted {rates[c]:.4f} of post-warmup proposals "
            f"(minimum {MIN_ACCEPTANCE})"
        )
    unconstrained = np.stack([r[0] for r in results])
    draws = np.stack([
        np.array([from_unconstrained(specs, u) for u in chain_u]) for chain_u in unconstrained
    ])
    return PosteriorDraws(
        draws=draws,
        acceptance_rate=rates,
        n_warmup=n_warmup,
        names=tuple(s.name for s in specs),
        log_posterior=np.stack([r[1] for r in results]),
    )
