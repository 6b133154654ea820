"""Parameter transforms, MAP fitting, MCMC sampling and diagnostics."""

from .diagnostics import effective_sample_size, split_rhat
from .mcmc import PosteriorDraws, mcmc_sample
from .optimize import MapResult, map_fit
from .transforms import (
    ParamSpec,
    from_unconstrained,
    log_jacobian,
    make_specs,
    to_unconstrained,
)

__all__ = [
    "MapResult",
    "ParamSpec",
    "PosteriorDraws",
    "effective_sample_size",
    "from_unconstrained",
    "log_jacobian",
    "make_specs",
    "map_fit",
    "mcmc_sample",
    "split_rhat",
    "to_unconstrained",
]
