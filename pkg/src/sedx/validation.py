"""Input coercion shared by the estimators."""
from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ConfigurationError, ExogenousHorizonError
from .windowing import TimeSeries


def check_series(y, X=None, series_id: str = "series") -> TimeSeries:
    """Coerce ``(y, X)`` into a validated :class:`TimeSeries`."""
    if isinstance(y, TimeSeries):
        if X is not None:
            raise ConfigurationError("pass exogenous values inside the TimeSeries, not as X")
        return y
    y = check_array(y, ensure_2d=False, dtype=np.float64, ensure_all_finite=True)
    if y.ndim == 2 and y.shape[1] == 1:
        y = y[:, 0]
    if y.ndim != 1:
        raise ConfigurationError(f"y must be one-dimensional, got shape {y.shape}")
    if X is None:
        X = np.zeros((y.size, 0))
    else:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.shape[1]:
            X = check_array(X, dtype=np.float64, ensure_all_finite=True)
    return TimeSeries(series_id, y, X)


def check_corpus(y, X=None) -> list[TimeSeries]:
    """A single series or a sequence of TimeSeries, as a list with unique ids
    and a common exogenous width."""
    if isinstance(y, TimeSeries) or not _is_series_list(y):
        corpus = [check_series(y, X)]
    else:
        if X is not None:
            raise ConfigurationError("X must be None when fitting on a list of TimeSeries")
        corpus = list(y)
    if not corpus:
        raise ConfigurationError("empty corpus")
    ids = [ts.id for ts in corpus]
    if len(set(ids)) != len(ids):
        raise ConfigurationError("series ids must be unique")
    widths = {ts.n_exog for ts in corpus}
    if len(widths) != 1:
        raise ConfigurationError(f"exogenous width differs across series: {sorted(widths)}")
    return corpus


def _is_series_list(obj) -> bool:
    return isinstance(obj, Sequence) and len(obj) > 0 and all(isinstance(s, TimeSeries) for s in obj)


def check_future_exog(X_future, horizon: int, n_exog: int) -> np.ndarray:
    if n_exog == 0:
        return np.zeros((horizon, 0))
    if X_future is None:
        raise ExogenousHorizonError(f"exogenous horizon unavailable: need {horizon} future rows of x")
    X_future = np.asarray(X_future, dtype=np.float64).reshape(-1, n_exog)
    if X_future.shape[0] < horizon:
        raise ExogenousHorizonError(f"exogenous horizon unavailable: need {horizon} future rows, got {X_future.shape[0]}")
    return check_array(X_future[:horizon], dtype=np.float64)
