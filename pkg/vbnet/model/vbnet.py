"""
Gray-box SOC tracker whose last layer is the virtual-battery integrator.

Dynamics from the context window go through two encoders: a convolutional encoder of the
outdoor temperature shared by every unit, and a per-unit MLP over indoor temperature,
last power, window statistics and the unit embedding. A static head maps the embedding
and the comfort band to the virtual capacity; a loss head maps the fused code plus the
raw indoor/outdoor temperature gap to the power loss, scaled by (1 + γ_k). The battery
is then rolled forward over the horizon with the measured power.
"""
from __future__ import annotations

from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from attrs import define

from vbnet.autodiff.engine import (
    Value,
    clamp,
    concat,
    lift,
    mse,
    relu,
    sigmoid,
)
from vbnet.autodiff.layers import MLP, Conv1d, Dense, Embedding, MaxPool1d, Module
from vbnet.config.interface import W_PER_KW, ExperimentConfig
from vbnet.data.dataset import Batch, NormStats, Sample, make_batch
from vbnet.errors import DomainError, InferenceError, ShapeError
from vbnet.physics.battery import VbParams

N_STAT_FEATURES = 3  # last power, mean and std of the indoor context
CAP_HIDDEN = 32
LOSS_HIDDEN = (64, 32)

LossFn = Callable[[int, Value], Value]


@define(slots=True)
class NetOutput:
    S_hat: Value  # (B, H)
    C_f_hat: Value  # (B, 1) J
    P_loss_hat: Value  # (B, H) kW
    h_env: Optional[Value] = None
    h_state: Optional[Value] = None
    h_fused: Optional[Value] = None


class SharedEncoder(Module):
    def __init__(self, seq_len: int, hidden_dim: int, rng: np.random.Generator):
        self.seq_len = seq_len
        self.conv1 = Conv1d(1, 16, 3, rng, padding=1)
        self.conv2 = Conv1d(16, 32, 3, rng, padding=1)
        self.pool = MaxPool1d(2)
        self.proj = Dense(32 * (seq_len // 4), hidden_dim, rng)

    def __call__(self, x_env) -> Value:
        x_env = lift(x_env)
        if x_env.ndim != 2 or x_env.shape[1] != self.seq_len:
            raise ShapeError(f"expected (batch, {self.seq_len}) outdoor context, got {x_env.shape}")
        h = x_env.reshape(x_env.shape[0], 1, self.seq_len)
        h = self.pool(relu(self.conv1(h)))
        h = self.pool(relu(self.conv2(h)))
        return self.proj(h.reshape(h.shape[0], -1))


def physics_rollout(
    S0,
    drive_T_out: np.ndarray,
    drive_P_ac: np.ndarray,
    C_f,
    loss_fn: LossFn,
    T_max: np.ndarray,
    dT_range: np.ndarray,
    eta: np.ndarray,
    dt: float = 3600.0,
):
    """
    Differentiable battery rollout.

    At each step the indoor temperature is reconstructed from the predicted SOC,
    ``loss_fn(k, ΔT_phy)`` supplies the power loss (kW) and the state advances with a
    clamped explicit step.

    Returns:
        ``(S_hat, P_loss_hat)``, both (B, H).

    Raises:
        InferenceError: when the state becomes non-finite, with the step index.
    """
    S = lift(S0)
    C_f = lift(C_f)
    states: List[Value] = []
    losses: List[Value] = []
    for k in range(drive_T_out.shape[1]):
        T_hat = T_max - S * dT_range
        dT_phy = drive_T_out[:, k : k + 1] - T_hat
        P_loss = loss_fn(k, dT_phy)
        S = clamp(S + dt * (eta * drive_P_ac[:, k : k + 1] - P_loss) * W_PER_KW / C_f)
        if not np.all(np.isfinite(S.data)):
            raise InferenceError("predicted SOC is not finite", step=k)
        states.append(S)
        losses.append(P_loss)
    return concat(states, axis=1), concat(losses, axis=1)


class VbNet(Module):
    def __init__(self, n_units: int, config: ExperimentConfig = None, seed: int = 0):
        config = config or ExperimentConfig()
        rng = np.random.default_rng(seed)
        self.n_units = n_units
        self.c_min, self.c_max = config.c_min, config.c_max
        self.dt = config.dt
        hidden, embed = config.hidden_dim, config.id_embed_dim

        self.shared = SharedEncoder(config.seq_len, hidden, rng)
        self.private = Dense(config.seq_len + N_STAT_FEATURES + embed, hidden, rng)
        self.embedding = Embedding(n_units, embed, rng)
        self.cap_head = MLP([embed + 1, CAP_HIDDEN, 1], rng, activation=relu)
        self.loss_base = MLP([2 * hidden + 1, *LOSS_HIDDEN, 1], rng, activation=relu)
        self.gamma = Embedding(n_units, 1, rng, init=config.gamma_init)

    def encode_shared(self, x_env) -> Value:
        return self.shared(x_env)

    def encode_private(self, x_tin, x_power_last, mu, sigma, unit_ids) -> Value:
        x = concat([lift(x_tin), lift(x_power_last), lift(mu), lift(sigma), self.embedding(unit_ids)], axis=1)
        return relu(self.private(x))

    def capacity_head(self, unit_ids, dT_range) -> Value:
        """Static virtual capacity in J, strictly inside (C_min, C_max)."""
        x = concat([self.embedding(unit_ids), lift(dT_range)], axis=1)
        return sigmoid(self.cap_head(x)) * (self.c_max - self.c_min) + self.c_min

    def loss_head(self, h_fused: Value, dT_phy, unit_ids) -> Value:
        base = self.loss_base(concat([h_fused, lift(dT_phy)], axis=1))
        return base * (1.0 + self.gamma(unit_ids))

    def gammas(self) -> np.ndarray:
        return self.gamma.table.data[:, 0].copy()

    def rollout(self, batch: Batch) -> NetOutput:
        h_env = self.encode_shared(batch.x_env)
        h_state = self.encode_private(
            batch.x_tin, batch.x_power_last, batch.mu, batch.sigma, batch.unit_ids
        )
        h_fused = concat([h_env, h_state], axis=1)
        C_f = self.capacity_head(batch.unit_ids, batch.dT_range)

        def loss_fn(_, dT_phy):
            return self.loss_head(h_fused, dT_phy, batch.unit_ids)

        S_hat, P_loss_hat = physics_rollout(
            batch.S0,
            batch.drive_T_out,
            batch.drive_P_ac,
            C_f,
            loss_fn,
            batch.T_max,
            batch.dT_range,
            batch.eta,
            self.dt,
        )
        return NetOutput(
            S_hat=S_hat,
            C_f_hat=C_f,
            P_loss_hat=P_loss_hat,
            h_env=h_env,
            h_state=h_state,
            h_fused=h_fused,
        )

    def soc(self, batch: Batch) -> Value:
        return self.rollout(batch).S_hat


def composite_loss(S_hat, S_true, lam: float = 1.0) -> Value:
    """
    Mean squared SOC error plus ``lam`` times the mean squared error of step-to-step
    SOC changes within the rollout.
    """
    S_hat, S_true = lift(S_hat), lift(S_true)
    if S_hat.ndim == 1:
        S_hat, S_true = S_hat.reshape(1, -1), S_true.reshape(1, -1)
    if S_hat.shape[1] < 2:
        raise DomainError("composite loss needs rollouts of at least two steps")
    value = mse(S_hat, S_true)
    if lam == 0:
        return value
    d_hat = S_hat[:, 1:] - S_hat[:, :-1]
    d_true = S_true[:, 1:] - S_true[:, :-1]
    return value + lam * mse(d_hat, d_true)


def identify(
    model: VbNet, samples: Sequence[Sample], stats: NormStats
) -> Dict[int, VbParams]:
    """Per-unit battery parameters over the horizons of ``samples`` (in sample order)."""
    if not samples:
        return {}
    batch = make_batch(samples, stats)
    out = model.rollout(batch)
    gammas = model.gammas()
    params = {}
    for uid in np.unique(batch.unit_ids):
        rows = batch.unit_ids == uid
        params[int(uid)] = VbParams(
            unit_id=int(uid),
            C_f=float(out.C_f_hat.data[rows, 0][0]),
            P_loss=out.P_loss_hat.data[rows].ravel(),
            gamma=float(gammas[uid]),
        )
    return params
