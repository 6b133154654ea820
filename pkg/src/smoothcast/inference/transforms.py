"""Maps between bounded parameter boxes and the real line.

=============  ==========================  ==============================
kind           constrained -> unconstrained  log |d constrained / du|
=============  ==========================  ==============================
unit           logit(x)                    log s(u) + log(1 - s(u))
positive       log(x)                      u
box(lo, hi)    logit((x - lo)/(hi - lo))   log(hi - lo) + log s(u) + log(1 - s(u))
unbounded      x                           0
=============  ==========================  ==============================

``s`` is the logistic sigmoid. Bounds are treated as open.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..exceptions import InvalidParameter, OutOfBounds

KINDS = ("unit", "positive", "box", "unbounded")


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str = "unbounded"
    lo: float = -math.inf
    hi: float = math.inf
    index: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameter(f"unknown bound kind {self.kind!r}")
        if self.kind == "unit":
            object.__setattr__(self, "lo", 0.0)
            object.__setattr__(self, "hi", 1.0)
        elif self.kind == "positive":
            object.__setattr__(self, "lo", 0.0)
            object.__setattr__(self, "hi", math.inf)
        elif self.kind == "box":
            if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
                raise InvalidParameter(f"box bounds for {self.name} must satisfy lo < hi")


def make_specs(entries) -> list:
    """Build a contiguous spec list from ``(name, kind[, lo, hi])`` tuples."""
    specs = []
    for i, entry in enumerate(entries):
        name, kind, *bounds = entry
        specs.append(ParamSpec(name, kind, *bounds, index=i))
    return specs


def check_specs(specs: Sequence[ParamSpec]):
    for i, spec in enumerate(specs):
        if spec.index != i:
            raise InvalidParameter(f"spec indices must be contiguous from 0; {spec.name} has {spec.index}")


def _sigmoid(u):
    # split by sign to stay accurate in both tails
    u = np.asarray(u, dtype=np.float64)
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


def _log_sigmoid(u):
    return -np.logaddexp(0.0, -u)


def _masks(specs):
    kinds = np.array([s.kind for s in specs])
    lo = np.array([s.lo for s in specs])
    hi = np.array([s.hi for s in specs])
    return kinds, lo, hi


def to_unconstrained(specs: Sequence[ParamSpec], x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (len(specs),):
        raise InvalidParameter(f"expected {len(specs)} parameters, got shape {x.shape}")
    kinds, lo, hi = _masks(specs)
    bounded = kinds != "unbounded"
    outside = bounded & ~((x > lo) & (x < hi))
    outside |= ~np.isfinite(x)
    if np.any(outside):
        i = int(np.flatnonzero(outside)[0])
        raise OutOfBounds(f"{specs[i].name}={x[i]!r} outside ({lo[i]}, {hi[i]})")
    u = x.copy()
    logit = (kinds == "unit") | (kinds == "box")
    p = (x[logit] - lo[logit]) / (hi[logit] - lo[logit])
    u[logit] = np.log(p) - np.log1p(-p)
    pos = kinds == "positive"
    u[pos] = np.log(x[pos])
    return u


def from_unconstrained(specs: Sequence[ParamSpec], u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    kinds, lo, hi = _masks(specs)
    x = u.copy()
    logit = (kinds == "unit") | (kinds == "box")
    x[logit] = lo[logit] + (hi[logit] - lo[logit]) * _sigmoid(u[logit])
    pos = kinds == "positive"
    x[pos] = np.exp(u[pos])
    return x


def log_jacobian(specs: Sequence[ParamSpec], u) -> float:
    """Log absolute determinant of the unconstrained -> constrained map."""
    u = np.asarray(u, dtype=np.float64)
    kinds, lo, hi = _masks(specs)
    logit = (kinds == "unit") | (kinds == "box")
    ul = u[logit]
    total = np.sum(_log_sigmoid(ul) + _log_sigmoid(-ul) + np.log(hi[logit] - lo[logit]))
    total += np.sum(u[kinds == "positive"])
    return float(total)
