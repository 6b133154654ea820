"""Bayesian exponential smoothing: LGT and DLT forecasting models.

Both models are additive state-space recursions with Student-t noise, fitted
by MAP optimization or adaptive random-walk Metropolis. Multiplicative
seasonality is handled by fitting on the log scale.
"""

from .artifact import load, save
from .backtest import SplitScheme, generate_splits, run_backtest, smape
from .distributions import (
    RandomSource,
    halfcauchy_logpdf,
    normal_logpdf,
    studentt_logpdf,
    studentt_sample,
)
from .dlt import DltParams, DltPriors, GlobalTrend, dlt_filter, dlt_forecast, global_trend_eval
from .estimator import ADDITIVE, MULTIPLICATIVE, Estimator, FittedModel, ModelConfig
from .forecast import FilterResult, FinalState, ForecastDistribution
from .lgt import LgtParams, LgtPriors, lgt_filter, lgt_forecast
from .models import DltModel, LgtModel, build_model
from .series import (
    InitialState,
    TimeSeries,
    initialize_states,
    inverse_log_transform,
    log_transform,
    validate_series,
)

__version__ = "0.1.0"

__all__ = [
    "ADDITIVE",
    "DltModel",
    "DltParams",
    "DltPriors",
    "Estimator",
    "FilterResult",
    "FinalState",
    "FittedModel",
    "ForecastDistribution",
    "GlobalTrend",
    "InitialState",
    "LgtModel",
    "LgtParams",
    "LgtPriors",
    "MULTIPLICATIVE",
    "ModelConfig",
    "RandomSource",
    "SplitScheme",
    "TimeSeries",
    "build_model",
    "dlt_filter",
    "dlt_forecast",
    "generate_splits",
    "global_trend_eval",
    "halfcauchy_logpdf",
    "initialize_states",
    "inverse_log_transform",
    "lgt_filter",
    "lgt_forecast",
    "load",
    "log_transform",
    "normal_logpdf",
    "run_backtest",
    "save",
    "smape",
    "studentt_logpdf",
    "studentt_sample",
    "validate_series",
]
