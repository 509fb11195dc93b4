"""Mini-batch BPTT training with RMSProp."""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import ConfigurationError, DivergenceError
from .network import SedxParams, backward, forward
from .numeric import RMSProp, mse_loss
from .windowing import WindowBatch

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    batch_size: int = 64
    learning_rate: float = 0.002
    epochs: int = 40
    seed: int = 0
    shuffle: bool = True
    deterministic: bool = True
    rho: float = 0.9
    eps: float = 1e-8

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")
        if self.learning_rate < 0:
            raise ConfigurationError("learning_rate must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainReport:
    train_loss: list = field(default_factory=list)
    val_mase: list = field(default_factory=list)
    val_mape: list = field(default_factory=list)
    seconds: float = 0.0
    best_epoch: int = -1
    epochs_completed: int = 0
    final_params: Optional[SedxParams] = field(default=None, repr=False)

    def history(self) -> dict:
        """Everything except wall-clock time and weights."""
        return {"train_loss": list(self.train_loss), "val_mase": list(self.val_mase),
                "val_mape": list(self.val_mape), "best_epoch": self.best_epoch,
                "epochs_completed": self.epochs_completed}


Validator = Callable[[SedxParams], "tuple[float, float]"]


def iterate_minibatches(n: int, batch_size: int, rng: np.random.Generator | None):
    order = rng.permutation(n) if rng is not None else np.arange(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]  # tail batch kept


def train(params: SedxParams, windows: WindowBatch, cfg: TrainConfig,
          validate: Validator | None = None) -> tuple[SedxParams, TrainReport]:
    """Fit ``params`` in place on ``windows``.

    ``validate(params) -> (mase, mape)`` is called after every epoch; the
    returned model is a copy of the weights from the epoch with the lowest
    validation MASE (the final weights stay on ``report.final_params``).
    Without a validator the final weights are returned.
    """
    n = len(windows)
    if n < 1:
        raise ConfigurationError("training needs at least one window")
    rng = np.random.default_rng(cfg.seed)
    opt = RMSProp(cfg.learning_rate, cfg.rho, cfg.eps)
    report = TrainReport()
    best, best_score = None, np.inf
    tic = time.perf_counter()
    theta = params.arrays()
    for epoch in range(cfg.epochs):
        total = 0.0
        for b, idx in enumerate(iterate_minibatches(n, cfg.batch_size, rng if cfg.shuffle else None)):
            batch = windows.take(idx)
            preds, cache = forward(params, batch)
            loss, dpreds = mse_loss(preds, batch.targets)
            if not np.isfinite(loss):
                raise DivergenceError(epoch, b, loss)
            opt.step(theta, backward(params, cache, dpreds).arrays())
            total += loss * len(idx)
        report.train_loss.append(total / n)
        report.epochs_completed = epoch + 1
        if validate is not None:
            mase, mape = validate(params)
            report.val_mase.append(float(mase))
            report.val_mape.append(float(mape))
            if mase < best_score:
                best_score, best = mase, params.copy()
                report.best_epoch = epoch
        logger.debug("epoch %d loss %.6g", epoch, report.train_loss[-1])
    report.seconds = time.perf_counter() - tic
    report.final_params = params.copy()
    if best is None:
        report.best_epoch = cfg.epochs - 1
        best = params.copy()
    return best, report
