"""
Reverse-mode automatic differentiation over float64 numpy arrays.

Every operation returns a new ``Value`` holding its parents and a closure that maps the
output gradient to one gradient per parent. ``Value.backward`` orders the graph
topologically and visits each node once; gradients reaching a parent through numpy
broadcasting are summed back to the parent's shape.
"""
from __future__ import annotations

from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from vbnet.errors import ShapeError, UnitLookupError

Grads = Tuple[Optional[np.ndarray], ...]


class Value:
    __slots__ = ("data", "grad", "_parents", "_backward", "name")
    # numpy operands defer to the reflected operators below
    __array_ufunc__ = None

    def __init__(
        self,
        data,
        parents: Tuple["Value", ...] = (),
        backward: Callable[[np.ndarray], Grads] = None,
        name: str = None,
    ):
        self.data = np.array(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data)
        self._parents = parents
        self._backward = backward
        self.name = name

    def __repr__(self):
        label = f" {self.name}" if self.name else ""
        return f"<Value{label} shape={self.shape}>"

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def backward(self):
        order = _topological_order(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is None:
                continue
            for parent, g in zip(node._parents, node._backward(node.grad)):
                if g is not None:
                    parent.grad = parent.grad + _unbroadcast(g, parent.data.shape)

    # operators
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __pow__(self, exponent: float):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, index):
        return getitem(self, index)

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 else shape)

    def sum(self, axis=None, keepdims=False):
        return reduce_sum(self, axis=axis, keepdims=keepdims)

    def mean(self):
        return mean(self)


ValueLike = Union[Value, float, np.ndarray]


def lift(x: ValueLike) -> Value:
    return x if isinstance(x, Value) else Value(x)


def _topological_order(root: Value):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def _unbroadcast(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def _broadcast_shape(*values: Value) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(*(v.shape for v in values))
    except ValueError:
        raise ShapeError(
            f"cannot broadcast shapes {', '.join(str(v.shape) for v in values)}"
        ) from None


# elementwise


def add(a: ValueLike, b: ValueLike) -> Value:
    a, b = lift(a), lift(b)
    _broadcast_shape(a, b)
    return Value(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: ValueLike, b: ValueLike) -> Value:
    a, b = lift(a), lift(b)
    _broadcast_shape(a, b)
    return Value(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: ValueLike, b: ValueLike) -> Value:
    a, b = lift(a), lift(b)
    _broadcast_shape(a, b)
    return Value(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def div(a: ValueLike, b: ValueLike) -> Value:
    a, b = lift(a), lift(b)
    _broadcast_shape(a, b)
    out = a.data / b.data
    return Value(out, (a, b), lambda g: (g / b.data, -g * out / b.data))


def power(a: ValueLike, exponent: float) -> Value:
    a = lift(a)
    return Value(
        a.data**exponent, (a,), lambda g: (g * exponent * a.data ** (exponent - 1),)
    )


def relu(a: ValueLike) -> Value:
    a = lift(a)
    mask = a.data > 0
    return Value(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def sigmoid(a: ValueLike) -> Value:
    a = lift(a)
    out = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return Value(out, (a,), lambda g: (g * out * (1.0 - out),))


def tanh(a: ValueLike) -> Value:
    a = lift(a)
    out = np.tanh(a.data)
    return Value(out, (a,), lambda g: (g * (1.0 - out * out),))


def clamp(a: ValueLike, lo: float = 0.0, hi: float = 1.0) -> Value:
    """Clips into [lo, hi]; gradient 1 inside the closed interval and 0 outside."""
    a = lift(a)
    inside = (a.data >= lo) & (a.data <= hi)
    return Value(np.clip(a.data, lo, hi), (a,), lambda g: (g * inside,))


# linear algebra and shape


def matmul(a: ValueLike, b: ValueLike) -> Value:
    a, b = lift(a), lift(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul of {a.shape} and {b.shape}")
    return Value(a.data @ b.data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def reshape(a: ValueLike, shape) -> Value:
    a = lift(a)
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"cannot reshape {a.shape} to {shape}") from None
    return Value(out, (a,), lambda g: (g.reshape(a.shape),))


def getitem(a: ValueLike, index) -> Value:
    a = lift(a)

    def backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        return (full,)

    return Value(a.data[index], (a,), backward)


def concat(values: Sequence[ValueLike], axis: int = -1) -> Value:
    values = [lift(v) for v in values]
    try:
        out = np.concatenate([v.data for v in values], axis=axis)
    except ValueError:
        raise ShapeError(
            f"cannot concatenate shapes {[v.shape for v in values]} along axis {axis}"
        ) from None
    bounds = np.cumsum([v.shape[axis] for v in values])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return Value(out, tuple(values), backward)


def stack(values: Sequence[ValueLike], axis: int = 1) -> Value:
    values = [lift(v) for v in values]
    shapes = {v.shape for v in values}
    if len(shapes) != 1:
        raise ShapeError(f"cannot stack shapes {sorted(shapes)}")
    out = np.stack([v.data for v in values], axis=axis)

    def backward(g):
        return tuple(np.moveaxis(g, axis, 0))

    return Value(out, tuple(values), backward)


def reduce_sum(a: ValueLike, axis=None, keepdims=False) -> Value:
    a = lift(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Value(out, (a,), backward)


def mean(a: ValueLike) -> Value:
    a = lift(a)
    n = a.data.size
    return Value(a.data.mean(), (a,), lambda g: (np.full(a.shape, g / n),))


def mse(pred: ValueLike, target: ValueLike) -> Value:
    pred, target = lift(pred), lift(target)
    if pred.shape != target.shape:
        raise ShapeError(f"mse of {pred.shape} and {target.shape}")
    diff = pred.data - target.data
    n = diff.size
    return Value(
        np.mean(diff * diff),
        (pred, target),
        lambda g: (2.0 * g * diff / n, -2.0 * g * diff / n),
    )


# network primitives


def embed_lookup(table: Value, ids) -> Value:
    """Rows of ``table`` selected by integer ``ids``; gradients scatter-add back."""
    ids = np.asarray(ids, dtype=np.int64)
    n_rows = table.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= n_rows):
        bad = int(ids[(ids < 0) | (ids >= n_rows)][0])
        raise UnitLookupError(f"unknown unit id {bad}; table has {n_rows} rows")

    def backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, g)
        return (full,)

    return Value(table.data[ids], (table,), backward)


def conv1d(x: Value, weight: Value, bias: Value, padding: int = 0) -> Value:
    """
    Cross-correlation of ``x`` (B, C_in, L) with ``weight`` (C_out, C_in, K) plus ``bias`` (C_out,).
    Output length is L + 2·padding − K + 1.
    """
    x, weight, bias = lift(x), lift(weight), lift(bias)
    if x.ndim != 3 or weight.ndim != 3 or x.shape[1] != weight.shape[1]:
        raise ShapeError(f"conv1d of input {x.shape} with kernel {weight.shape}")
    K = weight.shape[2]
    L = x.shape[2]
    L_out = L + 2 * padding - K + 1
    if L_out < 1:
        raise ShapeError(f"conv1d kernel {K} longer than padded input {L + 2 * padding}")

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding)))
    windows = sliding_window_view(xp, K, axis=2)  # (B, C_in, L_out, K)
    out = np.einsum("bclk,ock->bol", windows, weight.data) + bias.data[None, :, None]

    def backward(g):
        g_weight = np.einsum("bol,bclk->ock", g, windows)
        g_bias = g.sum(axis=(0, 2))
        g_xp = np.zeros_like(xp)
        for k in range(K):
            g_xp[:, :, k : k + L_out] += np.einsum("bol,oc->bcl", g, weight.data[:, :, k])
        return g_xp[:, :, padding : padding + L], g_weight, g_bias

    return Value(out, (x, weight, bias), backward)


def maxpool1d(x: Value, width: int = 2) -> Value:
    """Non-overlapping max pooling over the last axis; a trailing remainder is dropped."""
    x = lift(x)
    B, C, L = x.shape
    L_out = L // width
    if L_out < 1:
        raise ShapeError(f"maxpool width {width} longer than input {L}")
    blocks = x.data[:, :, : L_out * width].reshape(B, C, L_out, width)
    arg = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]

    def backward(g):
        g_blocks = np.zeros_like(blocks)
        np.put_along_axis(g_blocks, arg[..., None], g[..., None], axis=-1)
        full = np.zeros_like(x.data)
        full[:, :, : L_out * width] = g_blocks.reshape(B, C, L_out * width)
        return (full,)

    return Value(out, (x,), backward)
