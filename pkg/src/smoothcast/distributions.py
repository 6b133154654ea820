"""Log-densities and samplers for the noise and prior distributions.

All randomness flows through :class:`RandomSource`. Sub-streams are derived
from the root seed plus an integer key tuple (for example ``(chain, path)``),
so the draws a consumer sees do not depend on how work is scheduled.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import InvalidParameter, OutOfSupport

LOG_PI = math.log(math.pi)
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class RandomSource:
    """Seeded random stream with keyed, independent sub-streams."""

    def __init__(self, seed=0, key=()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise InvalidParameter(f"seed must fit in 64 unsigned bits, got {seed}")
        self.seed = seed
        self.key = tuple(int(k) for k in key)
        sequence = np.random.SeedSequence(entropy=seed, spawn_key=self.key)
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def substream(self, *key):
        """Independent stream addressed by ``key`` below this one."""
        return RandomSource(self.seed, self.key + tuple(int(k) for k in key))

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, key={self.key})"


def _check_scale(name, value):
    if not value > 0 or not math.isfinite(value):
        raise InvalidParameter(f"{name} must be positive and finite, got {value!r}")


def studentt_logpdf(x, nu, mu=0.0, sigma=1.0):
    """Log density of the location-scale Student-t distribution."""
    _check_scale("nu", nu)
    _check_scale("sigma", sigma)
    z = (x - mu) / sigma
    return (
        math.lgamma(0.5 * (nu + 1.0))
        - math.lgamma(0.5 * nu)
        - 0.5 * math.log(nu * math.pi)
        - math.log(sigma)
        - 0.5 * (nu + 1.0) * math.log1p(z * z / nu)
    )


def studentt_logpdf_sum(residuals, nu, sigma):
    """Sum of zero-location Student-t log densities over ``residuals``.

    Vectorized counterpart of summing :func:`studentt_logpdf`; used for the
    filter likelihoods.
    """
    _check_scale("nu", nu)
    _check_scale("sigma", sigma)
    z = np.asarray(residuals, dtype=np.float64) / sigma
    n = z.size
    const = (
        math.lgamma(0.5 * (nu + 1.0))
        - math.lgamma(0.5 * nu)
        - 0.5 * math.log(nu * math.pi)
        - math.log(sigma)
    )
    return n * const - 0.5 * (nu + 1.0) * float(np.sum(np.log1p(z * z / nu)))


def halfcauchy_logpdf(x, gamma):
    """Log density of the Half-Cauchy distribution with scale ``gamma``."""
    _check_scale("gamma", gamma)
    if x < 0:
        raise OutOfSupport(f"Half-Cauchy support is x >= 0, got {x!r}")
    z = x / gamma
    return math.log(2.0) - LOG_PI - math.log(gamma) - math.log1p(z * z)


def normal_logpdf(x, mu, sigma):
    _check_scale("sigma", sigma)
    z = (x - mu) / sigma
    return -HALF_LOG_2PI - math.log(sigma) - 0.5 * z * z


def studentt_sample(rs: RandomSource, nu, mu, sigma, n):
    """``n`` Student-t draws built as normal / sqrt(chi-square / nu)."""
    _check_scale("nu", nu)
    _check_scale("sigma", sigma)
    n = int(n)
    if n < 0:
        raise InvalidParameter(f"sample count must be >= 0, got {n}")
    gen = rs.generator
    z = gen.standard_normal(n)
    chi2 = gen.chisquare(nu, n)
    return mu + sigma * z / np.sqrt(chi2 / nu)
