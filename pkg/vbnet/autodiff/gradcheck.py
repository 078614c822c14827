from __future__ import annotations

from typing import Callable, Dict, Optional, Tuple

import numpy as np
from loguru import logger

from vbnet.autodiff.engine import (
    Value,
    add,
    clamp,
    concat,
    conv1d,
    div,
    embed_lookup,
    getitem,
    matmul,
    maxpool1d,
    mean,
    mse,
    mul,
    power,
    reduce_sum,
    relu,
    reshape,
    sigmoid,
    stack,
    sub,
    tanh,
)


def relative_error(g_ad: float, g_fd: float, floor: float = 1e-8) -> float:
    return abs(g_ad - g_fd) / max(floor, abs(g_ad) + abs(g_fd))


def _error(g_ad: float, g_fd: float, atol: float) -> float:
    if abs(g_ad) < atol and abs(g_fd) < atol:
        return 0.0
    return relative_error(g_ad, g_fd)


def grad_check(
    f: Callable[[], Value],
    params: Dict[str, Value],
    eps: float = 1e-5,
    max_entries: Optional[int] = None,
    seed: int = 0,
    atol: float = 1e-9,
    refine: int = 2,
    refine_above: float = 1e-6,
) -> float:
    """
    Compares reverse-mode gradients with central finite differences.

    Args:
        f: Rebuilds the scalar graph from the current parameter data on every call.
        params: Leaves to probe, by name.
        eps: Finite-difference half step.
        max_entries: Probe at most this many randomly chosen entries per parameter.
        seed: Seed of the entry sampler.
        atol: Pairs where both gradients are below this magnitude count as matching.
        refine: Entries whose error at ``eps`` exceeds ``refine_above`` are probed again
            with up to this many tenfold smaller steps. The result is only logged: an
            entry that agrees at a smaller step sits next to a relu or clamp kink.

    Returns:
        The maximum relative error at step ``eps`` over all probed entries.
    """
    for p in params.values():
        p.zero_grad()
    f().backward()
    analytic = {name: p.grad.copy() for name, p in params.items()}

    def central_difference(flat, i, h):
        original = flat[i]
        flat[i] = original + h
        f_plus = float(f().data)
        flat[i] = original - h
        f_minus = float(f().data)
        flat[i] = original
        return (f_plus - f_minus) / (2 * h)

    rng = np.random.default_rng(seed)
    worst, worst_name = 0.0, None
    for name, p in params.items():
        flat = p.data.reshape(-1)
        indices = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            indices = rng.choice(flat.size, size=max_entries, replace=False)
        for i in indices:
            g_ad = float(analytic[name].reshape(-1)[i])
            err = _error(g_ad, central_difference(flat, i, eps), atol)
            if err > refine_above and refine:
                h, refined = eps, err
                for _ in range(refine):
                    h /= 10
                    refined = min(refined, _error(g_ad, central_difference(flat, i, h), atol))
                logger.info(
                    f"grad check: {name}[{i}] error {err:.3e} at step {eps:.0e}, "
                    f"{refined:.3e} at step {h:.0e}"
                )
            if err > worst:
                worst, worst_name = err, f"{name}[{i}]"
    logger.debug(f"grad check: max relative error {worst:.3e} at {worst_name}")
    return worst


def _weighted_sum(out: Value, weights: np.ndarray) -> Value:
    return reduce_sum(out * weights)


def primitive_cases(rng: np.random.Generator) -> Dict[str, Tuple[Callable[[], Value], Dict[str, Value]]]:
    """
    One scalar graph per primitive, evaluated at random smooth points: relu and clamp
    inputs stay clear of their kinks, divisors and power bases clear of zero.
    """

    def leaf(name, shape, lo=-1.0, hi=1.0):
        return Value(rng.uniform(lo, hi, size=shape), name=name)

    def away_from_zero(name, shape):
        magnitude = rng.uniform(0.2, 1.0, size=shape)
        return Value(magnitude * rng.choice([-1.0, 1.0], size=shape), name=name)

    cases = {}

    def case(name, build, **params):
        probe = build()
        weights = rng.normal(size=probe.shape)
        cases[name] = (lambda: _weighted_sum(build(), weights), params)

    a, b = leaf("a", (3, 4)), leaf("b", (3, 4))
    case("add", lambda: add(a, b), a=a, b=b)
    case("sub", lambda: sub(a, b), a=a, b=b)
    case("mul", lambda: mul(a, b), a=a, b=b)
    row = leaf("row", (1, 4))
    case("broadcast_mul", lambda: mul(a, row), a=a, row=row)
    d = away_from_zero("d", (3, 4))
    case("div", lambda: div(a, d), a=a, d=d)
    p = leaf("p", (3, 4), 0.5, 2.0)
    case("power", lambda: power(p, 3.0), p=p)
    r = away_from_zero("r", (3, 4))
    case("relu", lambda: relu(r), r=r)
    case("sigmoid", lambda: sigmoid(a), a=a)
    case("tanh", lambda: tanh(a), a=a)
    c = Value(np.concatenate([rng.uniform(0.1, 0.9, 6), rng.uniform(1.2, 2.0, 3), rng.uniform(-1.0, -0.2, 3)]), name="c")
    case("clamp", lambda: clamp(c), c=c)
    m1, m2 = leaf("m1", (3, 5)), leaf("m2", (5, 2))
    case("matmul", lambda: matmul(m1, m2), m1=m1, m2=m2)
    case("reshape", lambda: reshape(a, (4, 3)), a=a)
    case("getitem", lambda: getitem(a, (slice(None), slice(1, 3))), a=a)
    case("concat", lambda: concat([a, b], axis=1), a=a, b=b)
    case("stack", lambda: stack([a, b], axis=1), a=a, b=b)
    case("reduce_sum", lambda: reduce_sum(a, axis=0), a=a)
    case("mean", lambda: mean(a) * 1.0, a=a)
    target = rng.uniform(-1, 1, size=(3, 4))
    case("mse", lambda: mse(a, target), a=a)
    table = leaf("table", (5, 3))
    ids = np.array([0, 2, 2, 4])
    case("embed_lookup", lambda: embed_lookup(table, ids), table=table)
    x, w, bias = leaf("x", (2, 3, 8)), leaf("w", (4, 3, 3)), leaf("bias", (4,))
    case("conv1d", lambda: conv1d(x, w, bias, padding=1), x=x, w=w, bias=bias)
    # distinct values keep every pooling window's maximum unique
    pooled = Value(rng.permutation(24).reshape(2, 2, 6) / 24.0, name="pooled")
    case("maxpool1d", lambda: maxpool1d(pooled, 2), pooled=pooled)
    return cases


def check_primitives(seed: int = 0, eps: float = 1e-5) -> Dict[str, float]:
    """Max relative error of every primitive's reverse rule."""
    rng = np.random.default_rng(seed)
    return {
        name: grad_check(f, params, eps=eps, seed=seed)
        for name, (f, params) in primitive_cases(rng).items()
    }
