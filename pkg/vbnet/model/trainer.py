from __future__ import annotations

import math
from typing import List, Optional, Sequence

import numpy as np
from attrs import define, field
from loguru import logger

from vbnet.autodiff.layers import Module
from vbnet.autodiff.optim import Adam
from vbnet.config.interface import ExperimentConfig
from vbnet.data.dataset import Batch, NormStats, Sample, make_batch
from vbnet.errors import DomainError, TrainingError
from vbnet.model.vbnet import composite_loss


@define(slots=True)
class TrainHistory:
    train_loss: List[float] = field(factory=list)
    monitor: List[float] = field(factory=list)
    best_epoch: int = -1
    best_monitor: float = math.inf
    monitored: str = "val_rmse"

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss)


class Trainer:
    """
    Mini-batch rollout training with early stopping.

    Every model exposes ``soc(batch) -> Value``; the loss is the composite SOC loss with
    weight ``lam`` on the step-difference term (0 gives plain MSE).
    """

    def __init__(
        self,
        model: Module,
        config: ExperimentConfig,
        lam: Optional[float] = None,
        seed: int = 0,
        name: str = "model",
    ):
        self.model = model
        self.config = config
        self.lam = config.lambda_ if lam is None else lam
        self.rng = np.random.default_rng(seed)
        self.name = name
        self.optimizer = Adam(model.named_parameters(), lr=config.lr)

    def _epoch(self, batch: Batch, epoch: int) -> float:
        order = self.rng.permutation(len(batch))
        size = self.config.batch_size
        total, seen = 0.0, 0
        for lo in range(0, len(order), size):
            mini = batch.subset(order[lo : lo + size])
            self.optimizer.zero_grad()
            loss = composite_loss(self.model.soc(mini), mini.S_true, self.lam)
            value = float(loss.data)
            if not math.isfinite(value):
                raise TrainingError(f"{self.name}: non-finite loss at epoch {epoch}")
            loss.backward()
            try:
                self.optimizer.step()
            except TrainingError as e:
                raise TrainingError(f"{self.name}: epoch {epoch}: {e}") from None
            total += value * len(mini)
            seen += len(mini)
        return total / seen

    def predict_batch(self, batch: Batch) -> np.ndarray:
        return np.clip(self.model.soc(batch).data, 0.0, 1.0)

    def fit(
        self,
        train: Sequence[Sample],
        stats: NormStats,
        val: Sequence[Sample] = (),
    ) -> TrainHistory:
        if not train:
            raise DomainError(f"{self.name}: no training samples")
        train_batch = make_batch(train, stats)
        val_batch = make_batch(val, stats) if val else None
        history = TrainHistory(monitored="val_rmse" if val_batch is not None else "train_loss")
        if val_batch is None:
            logger.warning(f"{self.name}: empty validation split, early stopping on training loss")

        best_state = self.model.state_dict()
        for epoch in range(self.config.epochs):
            loss = self._epoch(train_batch, epoch)
            if val_batch is not None:
                diff = self.predict_batch(val_batch) - val_batch.S_true
                monitor = float(np.sqrt(np.mean(diff * diff)))
            else:
                monitor = loss
            history.train_loss.append(loss)
            history.monitor.append(monitor)
            logger.debug(f"{self.name} epoch {epoch}: loss {loss:.3e}, {history.monitored} {monitor:.3e}")

            if monitor < history.best_monitor:
                history.best_monitor, history.best_epoch = monitor, epoch
                best_state = self.model.state_dict()
            elif epoch - history.best_epoch >= self.config.patience:
                logger.debug(f"{self.name}: early stop at epoch {epoch}")
                break

        self.model.load_state_dict(best_state)
        logger.info(
            f"{self.name}: {history.epochs_run} epochs, best {history.monitored} "
            f"{history.best_monitor:.3e} at epoch {history.best_epoch}"
        )
        return history

    def predict(self, samples: Sequence[Sample], stats: NormStats) -> np.ndarray:
        """(n, H) SOC predictions clamped to [0, 1]."""
        if not samples:
            return np.empty((0, self.config.rollout_len))
        return self.predict_batch(make_batch(samples, stats))
