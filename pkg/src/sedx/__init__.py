"""Seasonal multi-encoder GRU encoder-decoder forecasting with exogenous inputs,
linear SARX baselines, evaluation metrics and background-model grouping."""
from .baselines import SarxCoeffs, expand_multiplicative, fit_sarx, pacf, predict_sarx_recursive, synthesize_sarx
from .estimators import BEDXForecaster, CopyPreviousForecaster, SARXForecaster, SEDXForecaster
from .evaluation import evaluate_series, holdout_anchors
from .exceptions import (
    ConfigurationError,
    DivergenceError,
    ExogenousHorizonError,
    InstabilityError,
    ParseError,
    RankDeficiencyError,
    SedxError,
    UndefinedMetricError,
    WindowRangeError,
)
from .fileio import RunConfig, load_corpus, load_model, load_registry, save_model, save_registry
from .grouping import BackgroundModelGrouper, GroupingConfig, ModelRegistry, model_recursive
from .metrics import mape, mase, total_variation, welch_t
from .scaling import SequenceMinMaxScaler
from .windowing import SeasonalSpec, TimeSeries, assemble_window, build_batch

__version__ = "0.1.0"

__all__ = [
    "BEDXForecaster", "BackgroundModelGrouper", "ConfigurationError", "CopyPreviousForecaster",
    "DivergenceError", "ExogenousHorizonError", "GroupingConfig", "InstabilityError", "ModelRegistry",
    "ParseError", "RankDeficiencyError", "RunConfig", "SARXForecaster", "SEDXForecaster", "SarxCoeffs",
    "SeasonalSpec", "SedxError", "SequenceMinMaxScaler", "TimeSeries", "UndefinedMetricError",
    "WindowRangeError", "assemble_window", "build_batch", "evaluate_series", "expand_multiplicative",
    "fit_sarx", "holdout_anchors", "load_corpus", "load_model", "load_registry", "mape", "mase",
    "model_recursive", "pacf", "predict_sarx_recursive", "save_model", "save_registry", "synthesize_sarx",
    "total_variation", "welch_t",
]
