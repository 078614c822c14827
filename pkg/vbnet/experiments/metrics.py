from typing import Optional

import numpy as np

from vbnet.errors import DomainError, ShapeError


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.shape != truth.shape:
        raise ShapeError(f"prediction has {pred.size} values, truth has {truth.size}")
    if pred.size == 0:
        raise ShapeError("metrics need at least one value")
    return pred, truth


def rmse(pred, truth) -> float:
    """
    >>> rmse([1.0, 2.0], [1.0, 2.0])
    0.0
    """
    pred, truth = _pair(pred, truth)
    return float(np.sqrt(np.mean((truth - pred) ** 2)))


def r2(pred, truth) -> float:
    """
    Coefficient of determination.

    >>> r2([2.0, 2.0], [1.0, 3.0])
    0.0
    """
    pred, truth = _pair(pred, truth)
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    if ss_tot == 0:
        raise DomainError("R² is undefined for a constant truth series")
    return 1.0 - float(np.sum((truth - pred) ** 2)) / ss_tot


def r2_or_none(pred, truth) -> Optional[float]:
    try:
        return r2(pred, truth)
    except DomainError:
        return None


def ls_slope(x, y) -> float:
    """
    Least-squares slope of ``y`` against ``x`` (with intercept).

    >>> round(ls_slope([0.0, 1.0, 2.0], [1.0, 3.0, 5.0]), 12)
    2.0
    """
    x, y = _pair(x, y)
    x_c = x - x.mean()
    denom = float(np.sum(x_c * x_c))
    if denom == 0:
        raise DomainError("slope is undefined for a constant regressor")
    return float(np.sum(x_c * (y - y.mean())) / denom)
