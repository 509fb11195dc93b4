"""Forecast accuracy metrics and comparison statistics.

MASE here follows the multi-step form: every step's absolute error is scaled
by one shared denominator, the mean absolute lag-``k_norm`` difference of the
training segment (``k_norm`` defaults to the window length). ``per_step_lag``
switches to scaling step i by the lag-i naive error instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.special import stdtr

from .exceptions import ConfigurationError, UndefinedMetricError


@dataclass
class EvalWindow:
    preds: np.ndarray
    actuals: np.ndarray
    train_reference: np.ndarray = None

    def __post_init__(self):
        self.preds = np.asarray(self.preds, dtype=np.float64).reshape(-1)
        self.actuals = np.asarray(self.actuals, dtype=np.float64).reshape(-1)
        if self.preds.shape != self.actuals.shape:
            raise ConfigurationError(f"{self.preds.size} predictions for {self.actuals.size} actuals")
        if not np.all(np.isfinite(self.actuals)):
            raise ConfigurationError("actuals must be finite")

    def mape(self) -> float:
        return mape(self.preds, self.actuals)

    def mase(self, k_norm: int | None = None, per_step_lag: bool = False) -> float:
        return mase(self.preds, self.actuals, self.train_reference, k_norm, per_step_lag)


def mape(preds, actuals) -> float:
    """Mean over steps of |pred - actual| / |actual|, in percent."""
    preds = np.asarray(preds, dtype=np.float64)
    actuals = np.asarray(actuals, dtype=np.float64)
    zero = np.flatnonzero(actuals == 0)
    if zero.size:
        raise UndefinedMetricError(f"undefined MAPE: actual value is zero at index {zero[0]}", index=int(zero[0]))
    return float(np.mean(np.abs(preds - actuals) / np.abs(actuals)) * 100.0)


def naive_scale(train_reference, lag: int) -> float:
    """Mean absolute lag-``lag`` difference of the training segment."""
    ref = np.asarray(train_reference, dtype=np.float64)
    if lag < 1:
        raise ConfigurationError("MASE lag must be >= 1")
    if ref.size <= lag:
        raise ConfigurationError(f"training reference of length {ref.size} too short for lag {lag}")
    d = float(np.mean(np.abs(ref[lag:] - ref[:-lag])))
    if d == 0.0:
        raise UndefinedMetricError(f"MASE denominator is zero (training segment constant at lag {lag})")
    return d


def mase(preds, actuals, train_reference, k_norm: int | None = None, per_step_lag: bool = False) -> float:
    preds = np.asarray(preds, dtype=np.float64).reshape(-1)
    actuals = np.asarray(actuals, dtype=np.float64).reshape(-1)
    if preds.shape != actuals.shape:
        raise ConfigurationError(f"{preds.size} predictions for {actuals.size} actuals")
    if train_reference is None:
        raise ConfigurationError("MASE needs the training segment")
    err = np.abs(preds - actuals)
    if per_step_lag:
        scales = np.array([naive_scale(train_reference, i) for i in range(1, err.size + 1)])
        return float(np.mean(err / scales))
    k = err.size if k_norm is None else k_norm
    return float(np.mean(err) / naive_scale(train_reference, k))


def total_variation(series) -> float:
    """Sum of absolute first differences."""
    v = np.asarray(series, dtype=np.float64)
    return float(np.sum(np.abs(np.diff(v))))


@dataclass(frozen=True)
class WelchResult:
    t: float
    dof: float
    p_two_sided: float

    def significant(self, alpha: float = 0.05) -> bool:
        return self.p_two_sided < alpha


def welch_t(sample_a, sample_b) -> WelchResult:
    """Unequal-variance two-sample t-test with Welch-Satterthwaite dof."""
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise UndefinedMetricError("Welch test needs at least two points per sample")
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    if va == 0.0 and vb == 0.0:
        if a.mean() == b.mean():
            return WelchResult(0.0, float(a.size + b.size - 2), 1.0)
        raise UndefinedMetricError("Welch test undefined: both samples have zero variance")
    if va == 0.0 or vb == 0.0:
        raise UndefinedMetricError("Welch test undefined: one sample has zero variance")
    se2 = va + vb
    t = (a.mean() - b.mean()) / np.sqrt(se2)
    dof = se2 ** 2 / (va ** 2 / (a.size - 1) + vb ** 2 / (b.size - 1))
    p = 2.0 * stdtr(dof, -abs(t))
    return WelchResult(float(t), float(dof), float(min(p, 1.0)))


@dataclass
class MetricSummary:
    """Max / average / min of per-sequence means, per method and metric,
    plus pairwise candidate-vs-baseline breakdowns."""

    spread: dict = field(default_factory=dict)
    comparisons: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = []
        for method in sorted(self.spread):
            for metric, (mx, avg, mn) in sorted(self.spread[method].items()):
                out.append(f"{method}.{metric}.max={mx:.6g}")
                out.append(f"{method}.{metric}.avg={avg:.6g}")
                out.append(f"{method}.{metric}.min={mn:.6g}")
        for base in sorted(self.comparisons):
            for metric, c in sorted(self.comparisons[base].items()):
                pre = f"vs_{base}.{metric}"
                out.append(f"{pre}.better_pct={c['better_pct']:.6g}")
                for part in ("candidate_better", "baseline_better"):
                    cand, bl = c[part]
                    out.append(f"{pre}.{part}.n={c[part + '_n']}")
                    out.append(f"{pre}.{part}.candidate_avg={cand:.6g}")
                    out.append(f"{pre}.{part}.baseline_avg={bl:.6g}")
        return out


def _mean_or_nan(v):
    return float(np.mean(v)) if len(v) else float("nan")


def summarize(results: Mapping[str, Mapping[str, Mapping[str, float]]], candidate: str | None = None,
              metrics=("mase", "mape")) -> MetricSummary:
    """``results[method][series_id][metric]`` holds per-sequence mean errors.

    For each baseline, a sequence counts for the candidate only when the
    candidate's metric is strictly lower; ties go to the baseline.
    """
    summary = MetricSummary()
    for method, per_seq in results.items():
        summary.spread[method] = {}
        for metric in metrics:
            vals = [r[metric] for r in per_seq.values() if metric in r and np.isfinite(r[metric])]
            if vals:
                summary.spread[method][metric] = (float(np.max(vals)), float(np.mean(vals)), float(np.min(vals)))
    if candidate is None:
        return summary
    cand = results[candidate]
    for base, per_seq in results.items():
        if base == candidate:
            continue
        summary.comparisons[base] = {}
        for metric in metrics:
            ids = sorted(i for i in cand if i in per_seq and metric in cand[i] and metric in per_seq[i])
            if not ids:
                continue
            cv = np.array([cand[i][metric] for i in ids])
            bv = np.array([per_seq[i][metric] for i in ids])
            win = cv < bv
            summary.comparisons[base][metric] = {
                "better_pct": 100.0 * win.mean(),
                "candidate_better": (_mean_or_nan(cv[win]), _mean_or_nan(bv[win])),
                "baseline_better": (_mean_or_nan(cv[~win]), _mean_or_nan(bv[~win])),
                "candidate_better_n": int(win.sum()),
                "baseline_better_n": int((~win).sum()),
            }
    return summary
