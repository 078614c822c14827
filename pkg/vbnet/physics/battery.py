"""
Virtual-battery view of an air-conditioned zone.

The SOC mapping Φ turns the comfort band into [0, 1] (T_min → 1, T_max → 0). For a
first-order envelope the battery parameters follow in closed form:

    C_f       = C_th · (T_max − T_min)
    P_loss(t) = (T_out(t) − T_in(t)) / R

and rolling the battery forward with these parameters reproduces Φ(T_in) exactly when
both sides use the same explicit integrator.
"""
from __future__ import annotations

from typing import TYPE_CHECKING, Dict, Optional, Union

import numpy as np
from attrs import define, field

from vbnet.config.interface import W_PER_KW, AcUnitSpec
from vbnet.errors import DomainError

if TYPE_CHECKING:
    from vbnet.physics.thermal import Trajectory

ArrayLike = Union[float, np.ndarray]


def _scalar_or_array(x: np.ndarray):
    return float(x) if np.ndim(x) == 0 else x


def _check_band(T_min: float, T_max: float):
    if not T_max > T_min:
        raise DomainError(f"degenerate comfort band [{T_min}, {T_max}]")


def soc_from_temp(T: ArrayLike, T_min: float, T_max: float) -> ArrayLike:
    """Φ(T) = (T_max − T)/(T_max − T_min), evaluated on the band-clamped temperature."""
    _check_band(T_min, T_max)
    T = np.clip(np.asarray(T, dtype=np.float64), T_min, T_max)
    return _scalar_or_array((T_max - T) / (T_max - T_min))


def temp_from_soc(S: ArrayLike, T_min: float, T_max: float) -> ArrayLike:
    """Inverse mapping Φ⁻¹(S) = T_max − S·(T_max − T_min)."""
    _check_band(T_min, T_max)
    S = np.asarray(S, dtype=np.float64)
    if np.any(S < 0) or np.any(S > 1) or not np.all(np.isfinite(S)):
        raise DomainError("SOC must lie in [0, 1]")
    return _scalar_or_array(T_max - S * (T_max - T_min))


@define(slots=True)
class VbParams:
    unit_id: int
    C_f: float
    P_loss: np.ndarray = field(converter=lambda x: np.asarray(x, dtype=np.float64))
    gamma: Optional[float] = None

    def __attrs_post_init__(self):
        if not self.C_f > 0:
            raise DomainError(f"virtual capacity must be positive, got {self.C_f}")

    def to_report(self) -> Dict:
        return {
            "unit_id": self.unit_id,
            "C_f_J": float(self.C_f),
            "gamma": None if self.gamma is None else float(self.gamma),
            "p_loss_kw": [float(v) for v in self.P_loss],
        }


def oracle_params(unit: AcUnitSpec, T_out: ArrayLike, T_in: ArrayLike) -> VbParams:
    """Analytic battery parameters of a 1R-1C unit; γ has no analytic counterpart."""
    T_out = np.asarray(T_out, dtype=np.float64)
    T_in = np.asarray(T_in, dtype=np.float64)
    if T_out.shape != T_in.shape:
        raise DomainError(f"T_out {T_out.shape} and T_in {T_in.shape} differ in shape")
    return VbParams(
        unit_id=unit.id,
        C_f=unit.C_th * unit.dT_range,
        P_loss=np.atleast_1d((T_out - T_in) / unit.R),
    )


def vb_step(
    S: ArrayLike, P_ac: ArrayLike, P_loss: ArrayLike, C_f: ArrayLike, eta: ArrayLike, dt: float
) -> ArrayLike:
    """One explicit step of the battery; powers in kW, capacity in J."""
    S_next = np.asarray(S, dtype=np.float64) + dt * (
        np.asarray(eta) * np.asarray(P_ac) - np.asarray(P_loss)
    ) * W_PER_KW / np.asarray(C_f)
    return _scalar_or_array(np.clip(S_next, 0.0, 1.0))


def vb_rollout(
    S0: float, P_ac: np.ndarray, P_loss: np.ndarray, C_f: float, eta: float, dt: float
) -> np.ndarray:
    """States S_0..S_n obtained by applying ``vb_step`` for each of the n drivers."""
    P_ac = np.asarray(P_ac, dtype=np.float64)
    P_loss = np.asarray(P_loss, dtype=np.float64)
    states = np.empty(len(P_ac) + 1)
    states[0] = S0
    for k in range(len(P_ac)):
        states[k + 1] = vb_step(states[k], P_ac[k], P_loss[k], C_f, eta, dt)
    return states


def verify_isomorphism(unit: AcUnitSpec, traj: "Trajectory", dt: float = 3600.0) -> float:
    """
    Max absolute difference between the oracle battery rollout and Φ(T_in).

    The trajectory must have been integrated with the explicit Euler step at ``dt``
    for the difference to reduce to round-off.
    """
    params = oracle_params(unit, traj.env.T_out, traj.T_in)
    states = vb_rollout(traj.soc[0], traj.P_ac[:-1], params.P_loss[:-1], params.C_f, unit.eta, dt)
    return float(np.max(np.abs(states - traj.soc)))
