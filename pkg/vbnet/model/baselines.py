"""Black-box SOC predictors without a physics layer; outputs are clamped only at prediction time."""
from __future__ import annotations

import numpy as np

from vbnet.autodiff.engine import Value, concat, lift, relu
from vbnet.autodiff.layers import MLP, Conv1d, Embedding, LSTMCell, MaxPool1d, Module
from vbnet.config.interface import ExperimentConfig
from vbnet.data.dataset import Batch
from vbnet.errors import ConfigurationError, ShapeError

BASELINE_KINDS = ("dense", "conv", "recurrent")


class _Baseline(Module):
    kind = ""

    def __init__(self, n_units: int, config: ExperimentConfig, rng: np.random.Generator):
        self.seq_len = config.seq_len
        self.rollout_len = config.rollout_len
        self.embedding = Embedding(n_units, config.id_embed_dim, rng)

    def _static(self, batch: Batch) -> Value:
        return concat([lift(batch.S0), self.embedding(batch.unit_ids)], axis=1)

    def _check(self, batch: Batch):
        if batch.x_env.shape[1] != self.seq_len or batch.h_T_out.shape[1] != self.rollout_len:
            raise ShapeError(
                f"{self.kind} baseline expects {self.seq_len}+{self.rollout_len} steps, "
                f"got {batch.x_env.shape[1]}+{batch.h_T_out.shape[1]}"
            )

    def soc(self, batch: Batch) -> Value:
        raise NotImplementedError


class DenseBaseline(_Baseline):
    kind = "dense"

    def __init__(self, n_units, config, rng):
        super().__init__(n_units, config, rng)
        n_in = 3 * config.seq_len + 2 * config.rollout_len + 1 + config.id_embed_dim
        self.mlp = MLP([n_in, 128, 64, config.rollout_len], rng)

    def soc(self, batch: Batch) -> Value:
        self._check(batch)
        x = concat(
            [
                lift(batch.x_env),
                lift(batch.x_tin),
                lift(batch.x_power),
                lift(batch.h_T_out),
                lift(batch.h_P_ac),
                self._static(batch),
            ],
            axis=1,
        )
        return self.mlp(x)


def _channels_over_time(batch: Batch) -> np.ndarray:
    """(B, 3, L+H): outdoor temperature, indoor temperature zeroed over the horizon, power."""
    T_in = np.concatenate([batch.x_tin, np.zeros_like(batch.h_T_out)], axis=1)
    T_out = np.concatenate([batch.x_env, batch.h_T_out], axis=1)
    P_ac = np.concatenate([batch.x_power, batch.h_P_ac], axis=1)
    return np.stack([T_out, T_in, P_ac], axis=1)


class ConvBaseline(_Baseline):
    kind = "conv"

    def __init__(self, n_units, config, rng):
        super().__init__(n_units, config, rng)
        length = config.seq_len + config.rollout_len
        self.conv1 = Conv1d(3, 16, 3, rng, padding=1)
        self.conv2 = Conv1d(16, 32, 3, rng, padding=1)
        self.pool = MaxPool1d(2)
        self.head = MLP([32 * (length // 4) + 1 + config.id_embed_dim, 64, config.rollout_len], rng)

    def soc(self, batch: Batch) -> Value:
        self._check(batch)
        h = Value(_channels_over_time(batch))
        h = self.pool(relu(self.conv1(h)))
        h = self.pool(relu(self.conv2(h)))
        return self.head(concat([h.reshape(h.shape[0], -1), self._static(batch)], axis=1))


class RecurrentBaseline(_Baseline):
    kind = "recurrent"
    hidden = 64

    def __init__(self, n_units, config, rng):
        super().__init__(n_units, config, rng)
        self.cell = LSTMCell(4, self.hidden, rng)
        self.head = MLP([self.hidden + 1 + config.id_embed_dim, 64, config.rollout_len], rng)

    def soc(self, batch: Batch) -> Value:
        self._check(batch)
        channels = _channels_over_time(batch)
        B, _, length = channels.shape
        # fourth input flags context steps so the cell can tell a zeroed T_in from a real one
        flag = np.zeros((B, length))
        flag[:, : self.seq_len] = 1.0
        state = self.cell.initial_state(B)
        for t in range(length):
            x_t = np.concatenate([channels[:, :, t], flag[:, t : t + 1]], axis=1)
            state = self.cell(Value(x_t), state)
        h, _ = state
        return self.head(concat([h, self._static(batch)], axis=1))


_REGISTRY = {cls.kind: cls for cls in (DenseBaseline, ConvBaseline, RecurrentBaseline)}


def build_baseline(kind: str, n_units: int, config: ExperimentConfig = None, seed: int = 0):
    if kind not in _REGISTRY:
        raise ConfigurationError("baseline", f"unknown kind {kind!r}; expected one of {BASELINE_KINDS}")
    return _REGISTRY[kind](n_units, config or ExperimentConfig(), np.random.default_rng(seed))


def baseline_forward(batch: Batch, model: _Baseline) -> np.ndarray:
    """SOC prediction over the horizon, clamped to [0, 1]."""
    return np.clip(model.soc(batch).data, 0.0, 1.0)
