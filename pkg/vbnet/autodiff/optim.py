from __future__ import annotations

from typing import Dict, Tuple

import numpy as np
from attrs import define, field

from vbnet.autodiff.engine import Value
from vbnet.errors import TrainingError

BETAS = (0.9, 0.999)
EPS = 1e-8


@define(slots=True)
class AdamState:
    m: Dict[str, np.ndarray] = field(factory=dict)
    v: Dict[str, np.ndarray] = field(factory=dict)
    t: int = 0


def adam_step(
    params: Dict[str, np.ndarray],
    grads: Dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    betas: Tuple[float, float] = BETAS,
    eps: float = EPS,
) -> Tuple[Dict[str, np.ndarray], AdamState]:
    """
    One bias-corrected adaptive-moment update.

    Raises:
        TrainingError: when any gradient is non-finite, naming the parameter.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter '{name}'")

    b1, b2 = betas
    t = state.t + 1
    new_params, m_new, v_new = {}, {}, {}
    for name, p in params.items():
        g = grads[name]
        m = b1 * state.m.get(name, np.zeros_like(p)) + (1 - b1) * g
        v = b2 * state.v.get(name, np.zeros_like(p)) + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        new_params[name] = p - lr * m_hat / (np.sqrt(v_hat) + eps)
        m_new[name], v_new[name] = m, v
    return new_params, AdamState(m=m_new, v=v_new, t=t)


class Adam:
    """Applies ``adam_step`` to live ``Value`` parameters in place."""

    def __init__(self, named_params: Dict[str, Value], lr: float = 1e-3):
        self.params = dict(named_params)
        self.lr = lr
        self.state = AdamState()

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def step(self):
        data = {name: p.data for name, p in self.params.items()}
        grads = {name: p.grad for name, p in self.params.items()}
        updated, self.state = adam_step(data, grads, self.state, self.lr)
        for name, p in self.params.items():
            p.data = updated[name]
