"""Terminal-holdout evaluation of fitted forecasters."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, UndefinedMetricError
from .metrics import mape, mase
from .windowing import SeasonalSpec, TimeSeries, feasible_range, region_window_count

RESULT_COLUMNS = ("series_id", "window_anchor", "mase", "mape")


@dataclass(frozen=True)
class WindowResult:
    series_id: str
    window_anchor: int
    mase: float
    mape: float  # nan where an actual is zero

    def row(self) -> tuple:
        return (self.series_id, self.window_anchor, self.mase, self.mape)


def holdout_anchors(length: int, spec: SeasonalSpec, test_points: int) -> range:
    """Stride-1 anchors whose whole horizon lies in the last ``test_points``
    points; there are ``test_points - K`` of them."""
    n = region_window_count(test_points, spec)
    if n < 1:
        raise ConfigurationError(f"test region of {test_points} points is shorter than the horizon {spec.horizon}")
    anchors = range(length - test_points, length - spec.K)
    if anchors.start < feasible_range(spec, length).start:
        raise ConfigurationError(f"series of length {length} has too little history before its test region")
    return anchors


def evaluate_series(forecaster, ts: TimeSeries, spec: SeasonalSpec, test_points: int,
                    k_norm: int | None = None, per_step_lag: bool = False) -> list[WindowResult]:
    """Score ``forecaster`` on every test window of ``ts``. The MASE scale
    comes from the segment before the test region."""
    anchors = holdout_anchors(len(ts), spec, test_points)
    preds = forecaster.predict_windows(ts, anchors)
    ref = ts.y[:len(ts) - test_points]
    out = []
    for t, pred in zip(anchors, preds):
        actual = ts.y[t:t + spec.horizon]
        try:
            pct = mape(pred, actual)
        except UndefinedMetricError:
            pct = float("nan")
        out.append(WindowResult(ts.id, int(t), mase(pred, actual, ref, k_norm, per_step_lag), pct))
    return out


def per_sequence_means(results: list[WindowResult]) -> dict[str, dict[str, float]]:
    by_id: dict[str, list[WindowResult]] = {}
    for r in results:
        by_id.setdefault(r.series_id, []).append(r)
    out = {}
    for sid, rows in by_id.items():
        mapes = [r.mape for r in rows if np.isfinite(r.mape)]
        out[sid] = {"mase": float(np.mean([r.mase for r in rows])),
                    "mape": float(np.mean(mapes)) if mapes else float("nan"),
                    "windows": len(rows), "mape_windows": len(mapes)}
    return out
