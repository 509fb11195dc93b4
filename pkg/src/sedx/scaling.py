"""Per-sequence min-max scaling of every channel (y and each x component)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .windowing import TimeSeries


@dataclass
class ScaleParams:
    """Channel-wise minima and maxima; channel 0 is y, channels 1.. are x."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        self.min = np.asarray(self.min, dtype=np.float64).reshape(-1)
        self.max = np.asarray(self.max, dtype=np.float64).reshape(-1)
        if np.any(self.max < self.min):
            raise ValueError("max must be >= min on every channel")

    @property
    def span(self) -> np.ndarray:
        return self.max - self.min

    def to_dict(self) -> dict:
        return {"min": self.min.tolist(), "max": self.max.tolist()}

    @classmethod
    def from_dict(cls, d) -> "ScaleParams":
        return cls(d["min"], d["max"])

    @classmethod
    def identity(cls, n_channels: int) -> "ScaleParams":
        return cls(np.zeros(n_channels), np.ones(n_channels))


def fit_scale(ts: TimeSeries) -> ScaleParams:
    v = ts.values()
    return ScaleParams(v.min(axis=0), v.max(axis=0))


def _forward(v: np.ndarray, params: ScaleParams) -> np.ndarray:
    span = params.span
    safe = np.where(span > 0, span, 1.0)
    out = (v - params.min) / safe
    return np.where(span > 0, out, 0.0)


def apply_scale(ts: TimeSeries, params: ScaleParams) -> TimeSeries:
    v = _forward(ts.values(), params)
    return TimeSeries(ts.id, v[:, 0], v[:, 1:])


def scale(ts: TimeSeries) -> tuple[TimeSeries, ScaleParams]:
    """Map each channel into [0, 1]; constant channels map to zeros."""
    params = fit_scale(ts)
    return apply_scale(ts, params), params


def unscale(values, params: ScaleParams, channel: int = 0) -> np.ndarray:
    """Invert the scaling of one channel (the target ``y`` by default)."""
    v = np.asarray(values, dtype=np.float64)
    return v * params.span[channel] + params.min[channel]


class SequenceMinMaxScaler(TransformerMixin, BaseEstimator):
    """sklearn transformer over a single series given as ``(y, X)`` columns.

    ``fit`` learns channel-wise min/max of the 2-d array ``[y, X...]``;
    ``transform`` maps into [0, 1] and ``inverse_transform`` undoes it.
    """

    def fit(self, values, y=None):
        v = np.asarray(values, dtype=np.float64)
        v = v.reshape(len(v), -1)
        self.params_ = ScaleParams(v.min(axis=0), v.max(axis=0))
        self.n_features_in_ = v.shape[1]
        return self

    def transform(self, values):
        check_is_fitted(self, "params_")
        v = np.asarray(values, dtype=np.float64).reshape(len(values), -1)
        return _forward(v, self.params_)

    def inverse_transform(self, values):
        check_is_fitted(self, "params_")
        v = np.asarray(values, dtype=np.float64).reshape(len(values), -1)
        return v * self.params_.span + self.params_.min
