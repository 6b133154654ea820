"""Time-series container, validation, log transform and state initialization."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .exceptions import (
    InvalidPeriod,
    NonFiniteValue,
    NonMonotonicTimestamps,
    NonPositiveValue,
    RegressorShapeMismatch,
    SeriesTooShort,
    ValidationError,
)


def _frozen(array):
    array = np.array(array, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Ordered univariate observations with a seasonal period.

    ``timestamps`` are integer-coded and only their order matters.
    ``regressors`` has shape ``(len(values), J)`` with ``J`` possibly zero;
    ``regressor_names`` labels its columns.
    """

    timestamps: np.ndarray
    values: np.ndarray
    period_m: int = 1
    regressors: np.ndarray = field(default=None)
    regressor_names: tuple = ()

    def __len__(self):
        return len(self.values)

    @property
    def n_regressors(self):
        return self.regressors.shape[1]

    @property
    def has_seasonality(self):
        return self.period_m > 1

    def head(self, n):
        """First ``n`` observations as a new series (used for train slices)."""
        return TimeSeries(
            timestamps=self.timestamps[:n],
            values=_frozen(self.values[:n]),
            period_m=self.period_m,
            regressors=_frozen(self.regressors[:n]),
            regressor_names=self.regressor_names,
        )

    def with_values(self, values):
        return TimeSeries(
            timestamps=self.timestamps,
            values=_frozen(values),
            period_m=self.period_m,
            regressors=self.regressors,
            regressor_names=self.regressor_names,
        )

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.period_m == other.period_m
            and self.regressor_names == other.regressor_names
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.regressors, other.regressors)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class InitialState:
    """Starting level, trend and the first ``period_m`` seasonal indices."""

    level_0: float
    trend_0: float
    seasonal_0: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, InitialState):
            return NotImplemented
        return (
            self.level_0 == other.level_0
            and self.trend_0 == other.trend_0
            and np.array_equal(self.seasonal_0, other.seasonal_0)
        )

    __hash__ = None


def _regressor_matrix(regressors, n_rows, names):
    if regressors is None:
        return np.zeros((n_rows, 0)), ()
    if isinstance(regressors, Mapping):
        names = tuple(regressors)
        columns = [np.asarray(regressors[k], dtype=np.float64) for k in names]
        for name, col in zip(names, columns):
            if col.ndim != 1 or len(col) != n_rows:
                raise RegressorShapeMismatch(
                    f"regressor {name!r} has {col.size} rows, expected {n_rows}"
                )
        matrix = np.column_stack(columns) if columns else np.zeros((n_rows, 0))
        return matrix, names
    matrix = np.asarray(regressors, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    if matrix.ndim != 2 or matrix.shape[0] != n_rows:
        raise RegressorShapeMismatch(
            f"regressor matrix has shape {matrix.shape}, expected ({n_rows}, J)"
        )
    if names is None or len(names) == 0:
        names = tuple(f"x{j}" for j in range(matrix.shape[1]))
    names = tuple(names)
    if len(names) != matrix.shape[1]:
        raise RegressorShapeMismatch(
            f"{len(names)} regressor names for {matrix.shape[1]} columns"
        )
    return matrix, names


def validate_series(
    timestamps: Sequence,
    values: Sequence,
    regressors=None,
    period_m: int = 1,
    regressor_names: Optional[Sequence[str]] = None,
) -> TimeSeries:
    """Build a :class:`TimeSeries`, checking ordering, finiteness and shapes.

    ``regressors`` may be ``None``, a mapping of name to column, or a 2-D
    array (with optional ``regressor_names``). Inputs are never modified.
    """
    if isinstance(period_m, bool) or int(period_m) != period_m or period_m < 1:
        raise InvalidPeriod(f"period must be an integer >= 1, got {period_m!r}")
    period_m = int(period_m)

    ts = np.array(timestamps, dtype=np.int64, copy=True)
    ys = np.array(values, dtype=np.float64, copy=True)
    if ts.ndim != 1 or ys.ndim != 1 or len(ts) != len(ys):
        raise ValidationError(
            f"{len(ts)} timestamps for {len(ys)} values; both must be 1-D and aligned"
        )

    steps = np.diff(ts)
    bad = np.flatnonzero(steps <= 0)
    if bad.size:
        i = int(bad[0]) + 1
        raise NonMonotonicTimestamps(
            f"timestamps must be strictly increasing; violation at index {i}", index=i
        )

    nonfinite = np.flatnonzero(~np.isfinite(ys))
    if nonfinite.size:
        i = int(nonfinite[0])
        raise NonFiniteValue(f"non-finite value at index {i}", index=i)

    matrix, names = _regressor_matrix(regressors, len(ys), regressor_names)
    bad_rows = np.flatnonzero(~np.all(np.isfinite(matrix), axis=1))
    if bad_rows.size:
        i = int(bad_rows[0])
        raise NonFiniteValue(f"non-finite regressor value at index {i}", index=i)

    ts.setflags(write=False)
    return TimeSeries(
        timestamps=ts,
        values=_frozen(ys),
        period_m=period_m,
        regressors=_frozen(matrix),
        regressor_names=names,
    )


def log_transform(series: TimeSeries) -> TimeSeries:
    """Natural log of the values; everything else is carried over unchanged."""
    nonpositive = np.flatnonzero(series.values <= 0)
    if nonpositive.size:
        i = int(nonpositive[0])
        raise NonPositiveValue(
            f"multiplicative mode needs strictly positive values; "
            f"got {float(series.values[i])!r} at index {i}",
            index=i,
        )
    return series.with_values(np.log(series.values))


def inverse_log_transform(values) -> np.ndarray:
    """Elementwise exponential. Overflow yields ``inf`` rather than raising."""
    with np.errstate(over="ignore"):
        return np.exp(np.asarray(values, dtype=np.float64))


def min_length(period_m: int) -> int:
    return max(2 * period_m, 3) if period_m > 1 else 2


def initialize_states(series: TimeSeries) -> InitialState:
    """Deterministic starting states from the first two seasonal cycles.

    The level is the mean of the first cycle and the trend is the per-step
    change between the first two cycle means. Seasonal indices are the
    phase-wise deviations from each cycle's mean, averaged over both cycles
    and centred to sum to zero. With ``period_m == 1`` a "cycle" is a single
    observation, so ``level_0 = y_1`` and ``trend_0 = y_2 - y_1``.
    """
    m = series.period_m
    y = series.values
    need = min_length(m)
    if len(y) < need:
        raise SeriesTooShort(
            f"initialization needs at least {need} observations for period {m}, "
            f"got {len(y)}"
        )
    first = y[:m]
    level_0 = float(np.mean(first))
    if len(y) >= 2 * m:
        second = y[m : 2 * m]
        trend_0 = float((np.mean(second) - level_0) / m)
    else:
        trend_0 = float(np.mean(np.diff(y)))

    if m == 1:
        seasonal_0 = np.zeros(1)
    else:
        deviations = (first - first.mean()) + (second - second.mean())
        seasonal_0 = deviations / 2.0
        seasonal_0 = seasonal_0 - seasonal_0.mean()
    return InitialState(level_0=level_0, trend_0=trend_0, seasonal_0=_frozen(seasonal_0))
