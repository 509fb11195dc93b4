"""Series containers, model orders and the window layout of the seasonal
encoder-decoder.

For an anchor ``t`` (index of the first target) and orders ``(p, S, P, Q, K)``:

* encoder 0 reads ``[x(tau), y(tau)]`` for ``tau = t-p .. t-1``;
* encoder ``i`` (1 <= i <= P) reads ``tau = t-iS-Q_i .. t-iS-1``;
* decoder step ``k`` reads ``[x(t+k), x(t+k-S), y(t+k-S), ..., x(t+k-PS), y(t+k-PS)]``;
* targets are ``y(t) .. y(t+K)``.

Everything is fed oldest first.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import ConfigurationError, WindowRangeError


@dataclass
class TimeSeries:
    """One sequence: endogenous ``y`` (T,) and exogenous ``x`` (T, m)."""

    id: str
    y: np.ndarray
    x: np.ndarray = None

    def __post_init__(self):
        self.id = str(self.id)
        self.y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if self.x is None:
            self.x = np.zeros((self.y.size, 0))
        self.x = np.asarray(self.x, dtype=np.float64)
        if self.x.ndim == 1:
            self.x = self.x.reshape(-1, 1)
        if self.y.size < 1:
            raise ConfigurationError(f"series {self.id!r} is empty")
        if self.x.shape[0] != self.y.size:
            raise ConfigurationError(
                f"series {self.id!r}: len(y)={self.y.size} but len(x)={self.x.shape[0]}")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.x))):
            raise ConfigurationError(f"series {self.id!r} contains non-finite values")

    def __len__(self):
        return self.y.size

    @property
    def n_exog(self) -> int:
        return self.x.shape[1]

    def values(self) -> np.ndarray:
        """Stacked channels ``[y, x1..xm]`` of shape (T, m+1)."""
        return np.column_stack([self.y, self.x])

    def head(self, n: int) -> "TimeSeries":
        return TimeSeries(self.id, self.y[:n], self.x[:n])


@dataclass(frozen=True)
class SeasonalSpec:
    """Model orders. ``P == 0`` is the non-seasonal (BEDX) layout."""

    p: int
    S: int
    P: int
    Q: tuple = field(default=())
    K: int = 0

    def __post_init__(self):
        object.__setattr__(self, "Q", tuple(int(q) for q in self.Q))
        for name in ("p", "S", "P", "K"):
            object.__setattr__(self, name, int(getattr(self, name)))
        if self.p < 1:
            raise ConfigurationError("p must be >= 1")
        if self.S < 2:
            raise ConfigurationError("S must be >= 2")
        if self.P < 0:
            raise ConfigurationError("P must be >= 0")
        if len(self.Q) != self.P:
            raise ConfigurationError(f"Q must have P={self.P} entries, got {len(self.Q)}")
        if any(q < 1 for q in self.Q):
            raise ConfigurationError("every Q_i must be >= 1")
        if not 0 <= self.K <= self.S - 1:
            raise ConfigurationError(f"K must satisfy 0 <= K <= S-1={self.S - 1}, got {self.K}")
        if self.p >= self.S:
            raise ConfigurationError(f"p={self.p} must be smaller than S={self.S}")

    @property
    def horizon(self) -> int:
        return self.K + 1

    @property
    def min_history(self) -> int:
        """Smallest feasible anchor: every referenced index must be >= 0."""
        return max([self.p] + [i * self.S + q for i, q in enumerate(self.Q, start=1)])

    def without_seasonality(self) -> "SeasonalSpec":
        return SeasonalSpec(self.p, self.S, 0, (), self.K)

    def to_dict(self) -> dict:
        return {"p": self.p, "S": self.S, "P": self.P, "Q": list(self.Q), "K": self.K}


@dataclass
class WindowExample:
    """One model instance.

    ``encoder_inputs[i]`` has shape (steps_i, m+1); ``decoder_inputs`` has shape
    (K+1, m + P(m+1)); ``targets`` has shape (K+1,).
    """

    encoder_inputs: list
    decoder_inputs: np.ndarray
    targets: np.ndarray
    anchor_t: int


@dataclass
class WindowBatch:
    """Time-major stack of windows: encoder i is (steps_i, B, m+1), decoder
    inputs (K+1, B, dim), targets (B, K+1)."""

    encoder_inputs: list
    decoder_inputs: np.ndarray
    targets: np.ndarray
    anchors: np.ndarray
    series_ids: list = None

    def __len__(self):
        return self.targets.shape[0]

    def take(self, idx) -> "WindowBatch":
        idx = np.asarray(idx)
        ids = None if self.series_ids is None else [self.series_ids[i] for i in idx]
        return WindowBatch([e[:, idx] for e in self.encoder_inputs], self.decoder_inputs[:, idx],
                           self.targets[idx], self.anchors[idx], ids)

    def example(self, i: int) -> WindowExample:
        return WindowExample([e[:, i] for e in self.encoder_inputs], self.decoder_inputs[:, i],
                             self.targets[i], int(self.anchors[i]))

    @staticmethod
    def concatenate(batches: Sequence["WindowBatch"]) -> "WindowBatch":
        batches = [b for b in batches if len(b)]
        if not batches:
            raise ConfigurationError("no windows to concatenate")
        n_enc = len(batches[0].encoder_inputs)
        ids = []
        for b in batches:
            ids.extend(b.series_ids or [None] * len(b))
        return WindowBatch(
            [np.concatenate([b.encoder_inputs[i] for b in batches], axis=1) for i in range(n_enc)],
            np.concatenate([b.decoder_inputs for b in batches], axis=1),
            np.concatenate([b.targets for b in batches]),
            np.concatenate([b.anchors for b in batches]),
            ids,
        )


def encoder_indices(spec: SeasonalSpec, t: int) -> list[np.ndarray]:
    """Time indices read by each encoder, oldest first."""
    out = [np.arange(t - spec.p, t)]
    for i, q in enumerate(spec.Q, start=1):
        out.append(np.arange(t - i * spec.S - q, t - i * spec.S))
    return out


def decoder_seasonal_indices(spec: SeasonalSpec, t: int) -> np.ndarray:
    """(K+1, P) array; entry [k, i-1] is t + k - iS."""
    k = np.arange(spec.horizon)[:, None]
    i = np.arange(1, spec.P + 1)[None, :]
    return t + k - i * spec.S


def feasible_range(spec: SeasonalSpec, length: int) -> range:
    """All anchors whose history and full horizon fit in a series of ``length``."""
    return range(spec.min_history, max(length - spec.K, spec.min_history))


def check_anchor(spec: SeasonalSpec, length: int, t: int, need_targets: bool = True) -> None:
    if t < spec.min_history:
        raise WindowRangeError(
            f"anchor t={t} has insufficient history: need t >= max(p, i*S + Q_i) = {spec.min_history}",
            bound="history")
    if need_targets and t + spec.K > length - 1:
        raise WindowRangeError(
            f"anchor t={t} horizon exceeds series end: need t + K <= T-1 = {length - 1}",
            bound="horizon")


def build_batch(ts: TimeSeries, spec: SeasonalSpec, anchors, with_targets: bool = True) -> WindowBatch:
    """Vectorised window assembly for many anchors of one series."""
    anchors = np.asarray(list(anchors), dtype=np.int64)
    T = len(ts)
    for t in (anchors.min(), anchors.max()) if anchors.size else ():
        check_anchor(spec, T, int(t), need_targets=with_targets)
    vals = ts.values()  # (T, m+1) columns [y, x...]
    pair = np.column_stack([ts.x, ts.y])  # [x(tau), y(tau)]
    enc = []
    for offsets in encoder_indices(spec, 0):
        idx = anchors[None, :] + offsets[:, None]  # (steps, B)
        enc.append(pair[idx])
    k = np.arange(spec.horizon)
    future = anchors[None, :] + k[:, None]  # (K+1, B)
    if np.any(future >= T) and ts.n_exog:
        raise WindowRangeError("exogenous horizon exceeds series end", bound="horizon")
    parts = [ts.x[np.minimum(future, T - 1)]]
    for i in range(1, spec.P + 1):
        parts.append(pair[future - i * spec.S])
    dec = np.concatenate(parts, axis=-1)
    if with_targets:
        targets = vals[future, 0].T.copy()
    else:
        targets = np.full((anchors.size, spec.horizon), np.nan)
    return WindowBatch(enc, dec, targets, anchors, [ts.id] * anchors.size)


def assemble_window(ts: TimeSeries, spec: SeasonalSpec, t: int) -> WindowExample:
    check_anchor(spec, len(ts), t)
    return build_batch(ts, spec, [t]).example(0)


def enumerate_windows(ts: TimeSeries, spec: SeasonalSpec, anchors=None) -> list[WindowExample]:
    """One window per feasible anchor (stride 1), restricted to ``anchors`` if given."""
    feas = feasible_range(spec, len(ts))
    if anchors is None:
        anchors = feas
    chosen = [t for t in anchors if t in feas]
    if not chosen:
        return []
    batch = build_batch(ts, spec, chosen)
    return [batch.example(i) for i in range(len(chosen))]


@dataclass(frozen=True)
class AnchorSplit:
    train: range
    validation: range
    test: range


def split_train_validation_test(ts_or_length, spec: SeasonalSpec, test_len: int, val_len: int) -> AnchorSplit:
    """Terminal holdout on anchors.

    The test split is the last ``test_len`` feasible anchors and validation the
    ``val_len`` before it. Anchors of an earlier split whose targets would
    reach into a later split's first target are purged (K of them at each
    boundary), so no target index leaks forward.
    """
    length = ts_or_length if isinstance(ts_or_length, (int, np.integer)) else len(ts_or_length)
    if test_len < 1 or val_len < 0:
        raise ConfigurationError("test_len must be >= 1 and val_len >= 0")
    feas = feasible_range(spec, length)
    test = range(feas.stop - test_len, feas.stop)
    boundary = test.start - spec.K
    val = range(boundary - val_len, boundary)
    train_stop = val.start - spec.K if val_len else boundary
    train = range(feas.start, train_stop)
    if test.start < feas.start or val.start < feas.start or len(train) < 1:
        raise ConfigurationError(
            f"splits exhaust the {len(feas)} feasible anchors (test={test_len}, validation={val_len}, K={spec.K})")
    return AnchorSplit(train, val, test)


def region_window_count(region_len: int, spec: SeasonalSpec) -> int:
    """Number of stride-1 evaluation windows whose targets lie wholly inside a
    terminal region of ``region_len`` points."""
    return max(region_len - spec.K, 0)


def holdout_split(ts_or_length, spec: SeasonalSpec, test_points: int, val_points: int) -> AnchorSplit:
    """Split by holdout sizes in time points rather than anchors."""
    n_test = region_window_count(test_points, spec)
    n_val = region_window_count(val_points, spec)
    if n_test < 1:
        raise ConfigurationError(f"test region of {test_points} points is shorter than the horizon {spec.horizon}")
    return split_train_validation_test(ts_or_length, spec, n_test, n_val)
