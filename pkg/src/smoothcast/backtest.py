"""Expanding-window backtests scored by SMAPE."""

from __future__ import annotations

import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .distributions import RandomSource
from .exceptions import EmptyInput, InvalidParameter, LengthMismatch, SeriesTooShort
from .series import TimeSeries, min_length

logger = logging.getLogger(__name__)

BACKTEST_STREAM = 4


def smape(forecasts, actuals) -> float:
    """Symmetric mean absolute percentage error, in [0, 2].

    Mean over steps of ``|F - A| / ((|F| + |A|) / 2)``; a step where both
    values are zero contributes 0.
    """
    f = np.asarray(forecasts, dtype=np.float64)
    a = np.asarray(actuals, dtype=np.float64)
    if f.shape != a.shape or f.ndim != 1:
        raise LengthMismatch(f"forecasts {f.shape} and actuals {a.shape} must be equal-length vectors")
    if f.size == 0:
        raise EmptyInput("SMAPE needs at least one forecast step")
    denom = (np.abs(f) + np.abs(a)) / 2.0
    num = np.abs(f - a)
    terms = np.divide(num, denom, out=np.zeros_like(num), where=denom > 0)
    return float(np.mean(terms))


@dataclass(frozen=True)
class SplitScheme:
    horizon_h: int
    n_splits: int = 1
    incremental_steps: int = 1
    min_train_length: int = 1

    def __post_init__(self):
        for name in ("horizon_h", "n_splits", "incremental_steps", "min_train_length"):
            if int(getattr(self, name)) < 1:
                raise InvalidParameter(f"{name} must be >= 1, got {getattr(self, name)}")

    def required_length(self):
        return self.min_train_length + self.horizon_h + (self.n_splits - 1) * self.incremental_steps


@dataclass(frozen=True)
class Split:
    """Train on the first ``train_end`` points, test on ``[test_start, test_end)`` (0-based)."""

    train_end: int
    test_start: int
    test_end: int


def generate_splits(series_length, scheme: SplitScheme):
    """Expanding-window splits in chronological order.

    The last split tests on the final ``horizon_h`` points; each earlier
    split's training window ends ``incremental_steps`` sooner.
    """
    if series_length < scheme.required_length():
        raise SeriesTooShort(
            f"scheme needs at least {scheme.required_length()} points, got {series_length}"
        )
    last = series_length - scheme.horizon_h
    ends = [last - k * scheme.incremental_steps for k in range(scheme.n_splits)][::-1]
    return [Split(e, e, e + scheme.horizon_h) for e in ends]


def naive_seasonal_forecast(series: TimeSeries, h):
    """Repeat the last seasonal cycle (the last value when ``period_m == 1``)."""
    m = series.period_m
    if len(series) < max(m, 1):
        raise SeriesTooShort(f"seasonal naive needs {m} observations, got {len(series)}")
    last_cycle = series.values[-m:]
    return np.array([last_cycle[k % m] for k in range(int(h))])


# forecaster(train, h, future_regressors, rs) -> point forecasts
Forecaster = Callable[[TimeSeries, int, Optional[np.ndarray], RandomSource], np.ndarray]


def naive_forecaster(train, h, future_regressors, rs):
    return naive_seasonal_forecast(train, h)


@dataclass
class SplitResult:
    split: Split
    smape: float
    forecasts: np.ndarray
    actuals: np.ndarray


@dataclass
class SeriesReport:
    series_id: str
    splits: list = field(default_factory=list)
    error: Optional[str] = None

    @property
    def smapes(self):
        return np.array([s.smape for s in self.splits])

    @property
    def mean(self):
        return float(np.mean(self.smapes)) if self.splits else float("nan")

    @property
    def std(self):
        return float(np.std(self.smapes)) if self.splits else float("nan")

    @property
    def ok(self):
        return self.error is None


@dataclass
class BacktestReport:
    """Per-series SMAPE with an across-series aggregate.

    Splits are averaged within a series first; ``mean`` and ``std`` (population)
    are then taken over the per-series means of the successful series.
    """

    series: list
    scheme: SplitScheme
    failures: dict = field(default_factory=dict)

    @property
    def succeeded(self):
        return [r for r in self.series if r.ok]

    @property
    def mean(self):
        means = [r.mean for r in self.succeeded]
        return float(np.mean(means)) if means else float("nan")

    @property
    def std(self):
        means = [r.mean for r in self.succeeded]
        return float(np.std(means)) if means else float("nan")

    def to_dict(self):
        return {
            "scheme": {
                "horizon_h": self.scheme.horizon_h,
                "n_splits": self.scheme.n_splits,
                "incremental_steps": self.scheme.incremental_steps,
                "min_train_length": self.scheme.min_train_length,
            },
            "aggregate": {
                "mean_smape": self.mean,
                "std_smape": self.std,
                "n_series": len(self.succeeded),
                "n_failed": len(self.series) - len(self.succeeded) + len(self.failures),
            },
            "series": [
                {
                    "id": r.series_id,
                    "error": r.error,
                    "mean_smape": None if not r.ok else r.mean,
                    "std_smape": None if not r.ok else r.std,
                    "splits": [
                        {
                            "train_end": s.split.train_end,
                            "horizon": s.split.test_end - s.split.test_start,
                            "smape": s.smape,
                        }
                        for s in r.splits
                    ],
                }
                for r in self.series
            ],
            "failures": dict(sorted(self.failures.items())),
        }


def series_key(series_id):
    """Stable integer key for a series identifier (CRC-32 of its UTF-8 bytes)."""
    return zlib.crc32(str(series_id).encode("utf-8"))


def _backtest_one(series_id, series, forecaster, scheme, rs):
    report = SeriesReport(series_id)
    try:
        splits = generate_splits(len(series), scheme)
        for k, split in enumerate(splits):
            train = series.head(split.train_end)
            actuals = series.values[split.test_start : split.test_end]
            future_x = series.regressors[split.test_start : split.test_end]
            stream = rs.substream(BACKTEST_STREAM, series_key(series_id), k)
            forecasts = np.asarray(
                forecaster(train, scheme.horizon_h, future_x, stream), dtype=np.float64
            )
            report.splits.append(SplitResult(split, smape(forecasts, actuals), forecasts, actuals))
    except Exception as exc:  # per-series failures are reported, not fatal
        logger.warning("backtest of %s failed: %s", series_id, exc)
        report.splits = []
        report.error = f"{type(exc).__name__}: {exc}"
    return report


def run_backtest(series_set: Mapping[str, TimeSeries], forecaster: Forecaster,
                 scheme: SplitScheme, seed=0, n_jobs=1) -> BacktestReport:
    """Backtest every series independently; results are sorted by identifier.

    Split ``k`` of series ``s`` gets the random sub-stream
    ``(4, crc32(s), k)`` so results do not depend on which other series are
    present or how work is scheduled.
    """
    rs = RandomSource(seed)
    ids = sorted(series_set)

    def one(series_id):
        return _backtest_one(series_id, series_set[series_id], forecaster, scheme, rs)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            reports = list(pool.map(one, ids))
    else:
        reports = [one(i) for i in ids]
    return BacktestReport(series=reports, scheme=scheme)


def default_min_train(period_m):
    return min_length(period_m)
