"""Split R-hat and effective sample size for one scalar parameter.

Both take draws shaped ``(chains, iterations)``.
"""

from __future__ import annotations

import math

import numpy as np

from ..exceptions import TooFewDraws


def _check(draws):
    draws = np.asarray(draws, dtype=np.float64)
    if draws.ndim != 2 or draws.shape[0] < 2 or draws.shape[1] < 4:
        raise TooFewDraws(
            f"need at least 2 chains of 4 iterations, got shape {draws.shape}"
        )
    return draws


def split_rhat(draws) -> float:
    """Potential scale reduction over half-chains.

    Each chain is cut in half (dropping the middle draw of odd-length chains)
    and, with ``n`` draws per half-chain, ``W`` the mean within-half variance
    and ``B`` ``n`` times the variance of half-chain means::

        R = sqrt((W * (n - 1) / n + B / n) / W)

    Returns ``inf`` when every half-chain is constant (``W == 0``).
    """
    draws = _check(draws)
    n = draws.shape[1] // 2
    halves = np.concatenate([draws[:, :n], draws[:, -n:]], axis=0)
    within = float(np.mean(np.var(halves, axis=1, ddof=1)))
    between = n * float(np.var(np.mean(halves, axis=1), ddof=1))
    if within == 0.0:
        return math.inf
    return math.sqrt((within * (n - 1) / n + between / n) / within)


def _autocovariance(x):
    """Biased autocovariance of each row, via FFT."""
    n = x.shape[1]
    centred = x - x.mean(axis=1, keepdims=True)
    size = 2 ** int(math.ceil(math.log2(2 * n)))
    spectrum = np.fft.rfft(centred, n=size, axis=1)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), n=size, axis=1)[:, :n]
    return acov / n


def effective_sample_size(draws) -> float:
    """Autocorrelation-based ESS with Geyer's initial positive sequence.

    Autocorrelations are combined across chains through the within/between
    variance estimate; consecutive pairs ``rho_{2k} + rho_{2k+1}`` are summed
    until the first negative pair (kept non-increasing). The result is
    ``n_total / tau`` with ``tau = 1 + 2 * sum_{t>=1} rho_t``, capped at
    ``n_total``. Constant draws carry one value's worth of information and
    return 1.
    """
    draws = _check(draws)
    n_chains, n = draws.shape
    n_total = n_chains * n
    acov = _autocovariance(draws)
    chain_var = acov[:, 0] * n / (n - 1)
    within = float(np.mean(chain_var))
    var_plus = within * (n - 1) / n + float(np.var(draws.mean(axis=1), ddof=1))
    if var_plus <= 0.0:
        return 1.0
    rho = 1.0 - (within - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0

    pair_sum = 0.0
    previous = math.inf
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair < 0:
            break
        pair = min(pair, previous)
        pair_sum += pair
        previous = pair
    tau = -1.0 + 2.0 * pair_sum
    if tau <= 0:
        return float(n_total)
    return float(min(n_total / tau, n_total))
