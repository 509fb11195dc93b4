"""scikit-learn style forecasters.

Every forecaster follows the same protocol:

* ``fit(y, X=None)`` with ``y`` a 1-d array (``X`` its exogenous columns), a
  :class:`~sedx.windowing.TimeSeries`, or a list of TimeSeries (the encoder-
  decoder models train one shared model on all of them);
* ``predict(y, X=None, X_future=None)`` forecasts the K+1 values following
  the end of ``y``; ``X_future`` supplies the exogenous rows of the horizon;
* ``predict_windows(ts, anchors)`` returns an ``(n_anchors, K+1)`` array of
  forecasts whose first target is ``y(anchor)``, reading only ``y`` before
  each anchor.

Hyperparameters are constructor arguments, so ``get_params``/``set_params``
and ``sklearn.base.clone`` work as usual.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .baselines import SarxCoeffs, fit_sarx, predict_sarx_recursive
from .exceptions import ConfigurationError, UndefinedMetricError
from .metrics import mape as _mape
from .metrics import mase as _mase
from .network import SedxParams, extend_for_forecast, forward
from .scaling import ScaleParams, apply_scale, fit_scale, unscale
from .training import TrainConfig, TrainReport, train
from .validation import check_corpus, check_series
from .windowing import SeasonalSpec, TimeSeries, WindowBatch, build_batch, feasible_range


class _Forecaster(BaseEstimator):
    """Shared prediction plumbing; subclasses implement ``_spec`` and
    ``predict_windows``."""

    def _spec(self) -> SeasonalSpec:
        raise NotImplementedError

    @property
    def horizon(self) -> int:
        return self.K + 1

    def predict_windows(self, ts: TimeSeries, anchors) -> np.ndarray:
        raise NotImplementedError

    def predict_at(self, ts: TimeSeries, t: int, future_x=None) -> np.ndarray:
        """Forecast y(t)..y(t+K) from the history of ``ts`` before ``t``."""
        if t > len(ts):
            raise ConfigurationError(f"anchor {t} lies beyond the end of the series ({len(ts)})")
        full = extend_for_forecast(ts, t + self.K, future_x)
        return self.predict_windows(full, [t])[0]

    def predict(self, y, X=None, X_future=None, series_id: str | None = None) -> np.ndarray:
        ts = check_series(y, X, series_id or "series")
        return self.predict_at(ts, len(ts), X_future)


def _validation_split(length: int, spec: SeasonalSpec, val_len: int) -> tuple[range, range, int]:
    """Train and validation anchors when the last ``val_len`` points are held
    out; returns (train, val, first validation target index)."""
    feas = feasible_range(spec, length)
    n_val = max(val_len - spec.K, 0)
    if n_val == 0:
        return feas, range(feas.stop, feas.stop), length
    val = range(max(feas.stop - n_val, feas.start), feas.stop)
    train = range(feas.start, max(val.start - spec.K, feas.start))
    return train, val, val.start


class SEDXForecaster(_Forecaster):
    """Seasonal multi-encoder GRU encoder-decoder, trained on min-max scaled
    windows with RMSProp.

    Parameters
    ----------
    p, S, P, Q, K : model orders. ``Q`` lists the P seasonal group sizes; the
        decoder emits K+1 values per window.
    hidden, layers : GRU width and depth, shared by every encoder and the decoder.
    feed_context : also append the context vector to every decoder input.
    include_encoder0_context : put encoder 0's final state in the context
        vector; when False it is added to the projected decoder initial state.
    batch_size, learning_rate, epochs, seed, shuffle, deterministic : training loop.
    val_len : points held out at the end of each training series to pick the
        best epoch by validation MASE (0 keeps the final weights).
    scale : apply per-sequence min-max scaling (inverted before metrics).
    """

    def __init__(self, p=2, S=12, P=1, Q=(2,), K=0, hidden=7, layers=1, feed_context=True,
                 include_encoder0_context=True, batch_size=64, learning_rate=0.002, epochs=40,
                 val_len=0, seed=0, shuffle=True, deterministic=True, scale=True):
        self.p = p
        self.S = S
        self.P = P
        self.Q = Q
        self.K = K
        self.hidden = hidden
        self.layers = layers
        self.feed_context = feed_context
        self.include_encoder0_context = include_encoder0_context
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.val_len = val_len
        self.seed = seed
        self.shuffle = shuffle
        self.deterministic = deterministic
        self.scale = scale

    def _spec(self) -> SeasonalSpec:
        return SeasonalSpec(self.p, self.S, self.P, tuple(self.Q), self.K)

    def _train_config(self) -> TrainConfig:
        return TrainConfig(self.batch_size, self.learning_rate, self.epochs, self.seed, self.shuffle,
                           self.deterministic)

    def _scale_params(self, ts: TimeSeries) -> ScaleParams:
        if not self.scale:
            return ScaleParams.identity(ts.n_exog + 1)
        return fit_scale(ts)

    def fit(self, y, X=None):
        corpus = check_corpus(y, X)
        spec = self._spec()
        n_exog = corpus[0].n_exog
        self.scale_params_ = {}
        batches, val_items = [], []
        for ts in corpus:
            train_anchors, val_anchors, val_start = _validation_split(len(ts), spec, self.val_len)
            if len(train_anchors) < 1:
                raise ConfigurationError(f"series {ts.id!r} (length {len(ts)}) has no training window")
            sp = self._scale_params(ts.head(val_start))
            self.scale_params_[ts.id] = sp
            sts = apply_scale(ts, sp)
            batches.append(build_batch(sts, spec, train_anchors))
            if len(val_anchors):
                val_items.append((ts, sts, val_anchors, ts.y[:val_start], sp))
        windows = WindowBatch.concatenate(batches)
        params = SedxParams.init(spec, n_exog, self.hidden, self.layers, feed_context=self.feed_context,
                                 include_encoder0_context=self.include_encoder0_context, rng=self.seed)
        validate = _make_validator(spec, val_items) if val_items else None
        self.params_, self.report_ = train(params, windows, self._train_config(), validate)
        self.validation_errors_ = {item[0].id: _sequence_errors(self.params_, spec, item) for item in val_items}
        self.n_exog_ = n_exog
        self.series_ids_ = [ts.id for ts in corpus]
        self.n_windows_ = len(windows)
        return self

    def _scale_for(self, ts: TimeSeries, first_anchor: int) -> ScaleParams:
        known = getattr(self, "scale_params_", {})
        if ts.id in known:
            return known[ts.id]
        return self._scale_params(ts.head(max(first_anchor, 1)))

    def predict_windows(self, ts: TimeSeries, anchors) -> np.ndarray:
        """Forecasts in original units. Series seen during ``fit`` reuse their
        stored scaling; others are scaled by their history before the first
        anchor."""
        check_is_fitted(self, "params_")
        anchors = np.asarray(list(anchors), dtype=np.int64)
        if ts.n_exog != self.n_exog_:
            raise ConfigurationError(f"model was fitted with {self.n_exog_} exogenous columns, got {ts.n_exog}")
        sp = self._scale_for(ts, int(anchors.min()))
        batch = build_batch(apply_scale(ts, sp), self.params_.spec, anchors, with_targets=False)
        return unscale(forward(self.params_, batch)[0], sp)

    @property
    def report(self) -> TrainReport:
        check_is_fitted(self, "report_")
        return self.report_


class BEDXForecaster(SEDXForecaster):
    """Single-encoder ablation: standard lags only, future exogenous values
    at the decoder, no seasonal structure."""

    def __init__(self, p=2, S=12, K=0, hidden=7, layers=1, feed_context=True, batch_size=64,
                 learning_rate=0.002, epochs=40, val_len=0, seed=0, shuffle=True, deterministic=True,
                 scale=True):
        super().__init__(p=p, S=S, P=0, Q=(), K=K, hidden=hidden, layers=layers, feed_context=feed_context,
                         batch_size=batch_size, learning_rate=learning_rate, epochs=epochs, val_len=val_len,
                         seed=seed, shuffle=shuffle, deterministic=deterministic, scale=scale)

    def _spec(self) -> SeasonalSpec:
        return SeasonalSpec(self.p, self.S, 0, (), self.K)


def _make_validator(spec: SeasonalSpec, items):
    """Per-sequence mean validation MASE/MAPE in the original domain,
    averaged over the sequences where each is defined."""

    def validate(params: SedxParams):
        errs = [_sequence_errors(params, spec, item) for item in items]
        return _finite_mean([e["mase"] for e in errs]), _finite_mean([e["mape"] for e in errs])

    return validate


def _finite_mean(values) -> float:
    v = [x for x in values if np.isfinite(x)]
    return float(np.mean(v)) if v else float("nan")


def _sequence_errors(params: SedxParams, spec: SeasonalSpec, item) -> dict:
    """Mean validation errors of one sequence; nan where a metric is
    undefined (constant training segment, zero actuals)."""
    ts, sts, anchors, ref, sp = item
    batch = build_batch(sts, spec, anchors)
    preds = unscale(forward(params, batch)[0], sp)
    actual = ts.y[np.asarray(anchors)[:, None] + np.arange(spec.horizon)]
    try:
        m = float(np.mean([_mase(p_, a_, ref) for p_, a_ in zip(preds, actual)]))
    except UndefinedMetricError:
        m = float("nan")
    return {"mase": m, "mape": _safe_mean_mape(preds, actual)}


def _safe_mean_mape(preds, actual) -> float:
    vals = [_mape(p_, a_) for p_, a_ in zip(preds, actual) if np.all(a_ != 0)]
    return float(np.mean(vals)) if vals else float("nan")


class SARXForecaster(_Forecaster):
    """Linear seasonal AR with exogenous regressors, fitted by least squares
    and forecast by iterating the one-step formula."""

    def __init__(self, p=2, S=12, P=1, Q=(2,), K=0):
        self.p = p
        self.S = S
        self.P = P
        self.Q = Q
        self.K = K

    def _spec(self) -> SeasonalSpec:
        return SeasonalSpec(self.p, self.S, self.P, tuple(self.Q), self.K)

    def fit(self, y, X=None):
        corpus = check_corpus(y, X)
        if len(corpus) != 1:
            raise ConfigurationError("SARXForecaster fits a single series")
        ts = corpus[0]
        self.coeffs_: SarxCoeffs = fit_sarx(ts, self._spec())
        self.n_exog_ = ts.n_exog
        return self

    def predict_windows(self, ts: TimeSeries, anchors) -> np.ndarray:
        check_is_fitted(self, "coeffs_")
        spec = self._spec()
        return np.array([predict_sarx_recursive(self.coeffs_, ts, spec, int(t)) for t in anchors])


class CopyPreviousForecaster(_Forecaster):
    """Repeats the last observed value over the horizon."""

    def __init__(self, K=0):
        self.K = K

    def fit(self, y, X=None):
        check_corpus(y, X)
        self.fitted_ = True
        return self

    def predict_windows(self, ts: TimeSeries, anchors) -> np.ndarray:
        anchors = np.asarray(list(anchors), dtype=np.int64)
        if anchors.size and (anchors.min() < 1 or anchors.max() > len(ts)):
            raise ConfigurationError("copy-previous anchors must lie in [1, T]")
        return np.repeat(ts.y[anchors - 1][:, None], self.K + 1, axis=1)
