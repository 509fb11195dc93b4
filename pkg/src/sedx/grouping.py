"""Greedy recursive construction of background models over a corpus.

All sequences are min-max scaled individually. One encoder-decoder model is
trained on the windows of every sequence in the current group; sequences
whose validation error (measured after unscaling) is at most ``E_th`` are
assigned to it, and the procedure recurses on the rest. When a round
assigns nothing, or ``max_rounds`` is exhausted, each remaining sequence
gets its own linear fallback model.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from sklearn.base import BaseEstimator, clone

from .estimators import CopyPreviousForecaster, SARXForecaster, SEDXForecaster, _validation_split
from .exceptions import ConfigurationError, RankDeficiencyError
from .scaling import ScaleParams, apply_scale, fit_scale, scale, unscale  # noqa: F401  (re-exported)
from .windowing import TimeSeries

logger = logging.getLogger(__name__)

BACKGROUND = "background"
FALLBACK = "fallback"


@dataclass
class GroupingConfig:
    E_th: float = 0.3
    metric: str = "mase"
    max_rounds: int = 10
    fallback: str = "sarx"

    def __post_init__(self):
        if self.E_th < 0:
            raise ConfigurationError("E_th must be >= 0")
        if self.metric not in ("mase", "mape"):
            raise ConfigurationError(f"unknown grouping metric {self.metric!r}")
        if self.max_rounds < 1:
            raise ConfigurationError("max_rounds must be >= 1")
        if self.fallback not in ("sarx", "copy_previous"):
            raise ConfigurationError(f"unknown fallback {self.fallback!r}")


@dataclass
class RegistryEntry:
    model: object
    covered_ids: frozenset
    round: int
    kind: str
    errors: dict = field(default_factory=dict)


@dataclass
class ModelRegistry:
    entries: list = field(default_factory=list)
    scale_params: dict = field(default_factory=dict)

    def covered(self) -> list[str]:
        return [sid for e in self.entries for sid in e.covered_ids]

    def check_partition(self, ids) -> None:
        seen = self.covered()
        if len(seen) != len(set(seen)):
            raise AssertionError("a sequence is covered by more than one model")
        if set(seen) != set(ids):
            raise AssertionError(f"registry covers {sorted(set(seen))}, corpus is {sorted(set(ids))}")

    def entry_for(self, series_id: str) -> RegistryEntry:
        for e in self.entries:
            if series_id in e.covered_ids:
                return e
        raise KeyError(f"no model covers series {series_id!r}")

    def predict_windows(self, ts: TimeSeries, anchors) -> np.ndarray:
        return self.entry_for(ts.id).model.predict_windows(ts, anchors)

    @property
    def n_background(self) -> int:
        return sum(e.kind == BACKGROUND for e in self.entries)


def unusable_sequences(corpus, spec, val_len: int) -> list[str]:
    bad = []
    for ts in corpus:
        train, val, _ = _validation_split(len(ts), spec, val_len)
        if len(train) < 1 or len(val) < 1:
            bad.append(ts.id)
    return bad


def _fit_fallback(ts: TimeSeries, base: SEDXForecaster, kind: str):
    if kind == "sarx":
        model = SARXForecaster(base.p, base.S, base.P, tuple(base.Q), base.K)
        try:
            return model.fit(ts)
        except (RankDeficiencyError, ConfigurationError) as exc:
            logger.warning("SARX fallback failed for %s (%s); using copy-previous", ts.id, exc)
    return CopyPreviousForecaster(base.K).fit(ts)


def model_recursive(corpus, estimator: SEDXForecaster, gcfg: GroupingConfig,
                    on_round: Callable | None = None) -> ModelRegistry:
    """Cover ``corpus`` with background models and per-sequence fallbacks.

    ``estimator`` is an unfitted :class:`SEDXForecaster` (or BEDX) whose
    ``val_len`` defines each sequence's validation region; it is cloned for
    every round, so all rounds share its hyperparameters.
    """
    corpus = list(corpus)
    if not corpus:
        raise ConfigurationError("empty corpus")
    if estimator.val_len - estimator.K < 1:
        raise ConfigurationError("grouping needs val_len > K so every sequence has a validation window")
    spec = estimator._spec()
    bad = unusable_sequences(corpus, spec, estimator.val_len)
    if bad:
        raise ConfigurationError(f"unusable sequences (need >=1 training and validation window): {', '.join(bad)}")
    registry = ModelRegistry()
    for ts in corpus:
        _, _, val_start = _validation_split(len(ts), spec, estimator.val_len)
        registry.scale_params[ts.id] = fit_scale(ts.head(val_start))
    group = corpus
    fallback_round = gcfg.max_rounds + 1
    for rnd in range(1, gcfg.max_rounds + 1):
        model = clone(estimator).fit(group)
        errors = {sid: e[gcfg.metric] for sid, e in model.validation_errors_.items()}
        g1 = [ts for ts in group if np.isfinite(errors[ts.id]) and errors[ts.id] <= gcfg.E_th]
        logger.info("round %d: %d of %d sequences within E_th=%g", rnd, len(g1), len(group), gcfg.E_th)
        if on_round is not None:
            on_round(rnd, model, errors)
        if not g1:
            fallback_round = rnd
            break
        ids = frozenset(ts.id for ts in g1)
        registry.entries.append(RegistryEntry(model, ids, rnd, BACKGROUND, {i: errors[i] for i in ids}))
        group = [ts for ts in group if ts.id not in ids]
        if not group:
            return registry
    for ts in group:
        registry.entries.append(RegistryEntry(_fit_fallback(ts, estimator, gcfg.fallback),
                                              frozenset([ts.id]), fallback_round, FALLBACK))
    return registry


class BackgroundModelGrouper(BaseEstimator):
    """Thin estimator-style wrapper: ``fit(corpus)`` builds ``registry_``."""

    def __init__(self, estimator: SEDXForecaster | None = None, E_th=0.3, metric="mase", max_rounds=10,
                 fallback="sarx"):
        self.estimator = estimator
        self.E_th = E_th
        self.metric = metric
        self.max_rounds = max_rounds
        self.fallback = fallback

    def fit(self, corpus):
        est = self.estimator if self.estimator is not None else SEDXForecaster(val_len=20)
        cfg = GroupingConfig(self.E_th, self.metric, self.max_rounds, self.fallback)
        self.registry_ = model_recursive(corpus, est, cfg)
        return self

    def predict_windows(self, ts: TimeSeries, anchors) -> np.ndarray:
        return self.registry_.predict_windows(ts, anchors)
