from __future__ import annotations

from collections import OrderedDict
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from vbnet.autodiff.engine import (
    Value,
    concat,
    conv1d,
    embed_lookup,
    maxpool1d,
    relu,
    sigmoid,
    tanh,
)


class Module:
    """
    Container of trainable ``Value`` leaves.

    Parameters and sub-modules are discovered from instance attributes in assignment
    order, which makes parameter names (``shared.conv1.weight``) stable across runs.
    """

    def named_parameters(self, prefix: str = "") -> "OrderedDict[str, Value]":
        params = OrderedDict()
        for key, value in vars(self).items():
            name = f"{prefix}{key}"
            if isinstance(value, Value):
                params[name] = value
            elif isinstance(value, Module):
                params.update(value.named_parameters(prefix=f"{name}."))
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        params.update(item.named_parameters(prefix=f"{name}.{i}."))
        return params

    def parameters(self) -> List[Value]:
        return list(self.named_parameters().values())

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def num_parameters(self) -> int:
        return sum(p.data.size for p in self.parameters())

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters().items()}

    def load_state_dict(self, state: Dict[str, np.ndarray]):
        params = self.named_parameters()
        missing = set(params) - set(state)
        if missing:
            raise KeyError(f"missing parameters: {sorted(missing)}")
        for name, p in params.items():
            data = np.asarray(state[name], dtype=np.float64)
            if data.shape != p.shape:
                raise ValueError(f"{name}: expected shape {p.shape}, got {data.shape}")
            p.data = data.copy()
            p.zero_grad()


def _uniform(rng: np.random.Generator, fan_in: int, shape: Tuple[int, ...], name: str) -> Value:
    bound = 1.0 / np.sqrt(fan_in)
    return Value(rng.uniform(-bound, bound, size=shape), name=name)


class Dense(Module):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator):
        self.weight = _uniform(rng, n_in, (n_in, n_out), "weight")
        self.bias = _uniform(rng, n_in, (n_out,), "bias")

    def __call__(self, x: Value) -> Value:
        return x @ self.weight + self.bias


class Conv1d(Module):
    def __init__(
        self, c_in: int, c_out: int, kernel: int, rng: np.random.Generator, padding: int = 0
    ):
        self.padding = padding
        self.weight = _uniform(rng, c_in * kernel, (c_out, c_in, kernel), "weight")
        self.bias = _uniform(rng, c_in * kernel, (c_out,), "bias")

    def __call__(self, x: Value) -> Value:
        return conv1d(x, self.weight, self.bias, padding=self.padding)


class MaxPool1d(Module):
    def __init__(self, width: int = 2):
        self.width = width

    def __call__(self, x: Value) -> Value:
        return maxpool1d(x, self.width)


class Embedding(Module):
    def __init__(self, n_rows: int, dim: int, rng: np.random.Generator, init: float = None):
        if init is None:
            data = rng.normal(0.0, 1.0, size=(n_rows, dim))
        else:
            data = np.full((n_rows, dim), float(init))
        self.table = Value(data, name="table")

    def __call__(self, ids) -> Value:
        return embed_lookup(self.table, ids)


class MLP(Module):
    """Dense stack with ``activation`` between layers and a linear output."""

    def __init__(
        self,
        sizes: Sequence[int],
        rng: np.random.Generator,
        activation: Callable[[Value], Value] = relu,
        activate_last: bool = False,
    ):
        self.layers = [Dense(a, b, rng) for a, b in zip(sizes[:-1], sizes[1:])]
        self.activation = activation
        self.activate_last = activate_last

    def __call__(self, x: Value) -> Value:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1 or self.activate_last:
                x = self.activation(x)
        return x


class LSTMCell(Module):
    """Recurrent cell with input, forget and output gates."""

    def __init__(self, n_in: int, hidden: int, rng: np.random.Generator):
        self.hidden = hidden
        self.gates = Dense(n_in + hidden, 4 * hidden, rng)

    def initial_state(self, batch: int) -> Tuple[Value, Value]:
        return Value(np.zeros((batch, self.hidden))), Value(np.zeros((batch, self.hidden)))

    def __call__(self, x: Value, state: Tuple[Value, Value]) -> Tuple[Value, Value]:
        h, c = state
        z = self.gates(concat([x, h], axis=1))
        H = self.hidden
        i = sigmoid(z[:, 0:H])
        f = sigmoid(z[:, H : 2 * H])
        o = sigmoid(z[:, 2 * H : 3 * H])
        g = tanh(z[:, 3 * H : 4 * H])
        c = f * c + i * g
        h = o * tanh(c)
        return h, c
