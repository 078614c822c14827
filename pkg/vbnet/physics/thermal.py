"""
First-order (1R-1C) envelope simulation of an air-conditioned zone in cooling mode.

    C_th dT/dt = (T_out − T)/R − η·P_ac

R is given in °C/kW and powers in kW; every rate is converted to W before it meets C_th
(J/°C). The price-responsive controller raises the setpoint with the normalized price,
so expensive hours get less cooling.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from attrs import define, field
from loguru import logger

from vbnet.config.interface import W_PER_KW, AcUnitSpec
from vbnet.errors import DomainError, IngestionError, SimulationError
from vbnet.physics.battery import soc_from_temp

PRICE_WINDOW = 24
CSV_COLUMNS = ["timestamp", "T_out", "price", "T_in", "P_ac", "soc"]


def _float_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


@define(slots=True)
class EnvSeries:
    """Hourly exogenous drivers shared by every unit of a district."""

    t: np.ndarray = field(converter=lambda x: np.asarray(x, dtype="datetime64[h]"))
    T_out: np.ndarray = field(converter=_float_array)
    price: np.ndarray = field(converter=_float_array)

    def __attrs_post_init__(self):
        if not len(self.t) == len(self.T_out) == len(self.price):
            raise DomainError(
                f"length mismatch: t={len(self.t)}, T_out={len(self.T_out)}, price={len(self.price)}"
            )
        steps = np.diff(self.t).astype(np.int64)
        if np.any(steps != 1):
            row = int(np.flatnonzero(steps != 1)[0]) + 1
            raise DomainError(f"timestamps must advance by exactly one hour (index {row})")

    def __len__(self):
        return len(self.t)


@define(slots=True)
class Trajectory:
    """Simulated or measured operation of one unit; ``T_in`` is raw, ``soc`` is Φ(clamped T_in)."""

    unit_id: int
    env: EnvSeries
    T_in: np.ndarray = field(converter=_float_array)
    P_ac: np.ndarray = field(converter=_float_array)
    soc: np.ndarray = field(converter=_float_array)

    def __attrs_post_init__(self):
        n = len(self.env)
        if not len(self.T_in) == len(self.P_ac) == len(self.soc) == n:
            raise DomainError("trajectory columns must match the driving series length")

    def __len__(self):
        return len(self.env)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "timestamp": pd.to_datetime(self.env.t.astype("datetime64[s]")),
                "T_out": self.env.T_out,
                "price": self.env.price,
                "T_in": self.T_in,
                "P_ac": self.P_ac,
                "soc": self.soc,
            },
            columns=CSV_COLUMNS,
        )


def heat_gain_1r1c(T_out, T_in, R: float):
    """Newton's-law heat gain through the envelope, kW."""
    return (T_out - T_in) / R


def step_exact(T: float, T_out: float, P: float, unit: AcUnitSpec, dt: float) -> float:
    """Closed-form solution of the envelope ODE over ``dt`` seconds with constant inputs."""
    if dt <= 0:
        raise DomainError("dt > 0")
    T_inf = T_out - unit.eta * P * unit.R
    return T_inf + (T - T_inf) * math.exp(-dt / unit.tau)


def step_euler(T: float, T_out: float, P: float, unit: AcUnitSpec, dt: float) -> float:
    if dt <= 0:
        raise DomainError("dt > 0")
    return T + dt * (heat_gain_1r1c(T_out, T, unit.R) - unit.eta * P) * W_PER_KW / unit.C_th


def mean_heat_gain_exact(T: float, T_out: float, P: float, unit: AcUnitSpec, dt: float) -> float:
    """Step-mean heat gain (kW) along the exact solution started at ``T``."""
    T_inf = T_out - unit.eta * P * unit.R
    mean_T = T_inf + (T - T_inf) * unit.tau / dt * (1.0 - math.exp(-dt / unit.tau))
    return heat_gain_1r1c(T_out, mean_T, unit.R)


def normalized_price(price: np.ndarray, t: int, window: int = PRICE_WINDOW) -> float:
    """Min-max position of ``price[t]`` within the trailing window; 0.5 for a flat window."""
    recent = price[max(0, t - window + 1) : t + 1]
    lo, hi = float(np.min(recent)), float(np.max(recent))
    if hi - lo < 1e-12:
        return 0.5
    return (float(price[t]) - lo) / (hi - lo)


def setpoint(env: EnvSeries, unit: AcUnitSpec, t: int) -> float:
    return unit.T_min + unit.dT_range * normalized_price(env.price, t)


def price_responsive_power(
    env: EnvSeries, unit: AcUnitSpec, T_now: float, t: Optional[int] = None
) -> float:
    """
    Electrical power commanded at hour ``t`` (default: the last hour of ``env``).

    Proportional control around the price-dependent setpoint with a feed-forward term
    that holds the setpoint against the current outdoor temperature.
    """
    t = len(env) - 1 if t is None else t
    T_set = setpoint(env, unit, t)
    P_eq = max(0.0, (env.T_out[t] - T_set) / (unit.eta * unit.R))
    K = unit.P_max / unit.dT_range
    return float(min(max(K * (T_now - T_set) + P_eq, 0.0), unit.P_max))


def simulate_unit(
    unit: AcUnitSpec,
    env: EnvSeries,
    T_init: float,
    dt: float = 3600.0,
    substeps: int = 6,
    integrator: str = "exact",
) -> Trajectory:
    """
    Drives one unit through ``env``; power is decided hourly and held over the hour.

    Args:
        unit: Physical parameters of the zone.
        env: Hourly outdoor temperature and price.
        T_init: Indoor temperature at the first hour, inside the comfort band.
        dt: Seconds per recorded step.
        substeps: Integration substeps per recorded step.
        integrator: ``"exact"`` (closed form) or ``"euler"`` (explicit Euler).

    Raises:
        SimulationError: when the state becomes non-finite.
    """
    if not unit.T_min <= T_init <= unit.T_max:
        raise DomainError(f"T_init={T_init} outside [{unit.T_min}, {unit.T_max}]")
    if integrator not in ("exact", "euler"):
        raise DomainError(f"unknown integrator {integrator!r}")
    step = step_exact if integrator == "exact" else step_euler
    h = dt / substeps

    n = len(env)
    T_in = np.empty(n)
    P_ac = np.empty(n)
    T = float(T_init)
    for t in range(n):
        if not math.isfinite(T):
            raise SimulationError("indoor temperature is not finite", step=t)
        T_in[t] = T
        P_ac[t] = price_responsive_power(env, unit, T, t)
        for _ in range(substeps):
            T = step(T, env.T_out[t], P_ac[t], unit, h)

    soc = soc_from_temp(T_in, unit.T_min, unit.T_max)
    logger.debug(
        f"{unit.name}: simulated {n} h, T_in ∈ [{T_in.min():.2f}, {T_in.max():.2f}] °C, "
        f"mean P_ac {P_ac.mean():.2f} kW"
    )
    return Trajectory(unit_id=unit.id, env=env, T_in=T_in, P_ac=P_ac, soc=soc)


def check_trajectory(unit: AcUnitSpec, traj: Trajectory, tolerance: float = 1.0):
    """Raises ``SimulationError`` at the first step that breaks a trajectory invariant."""
    bad_temp = (traj.T_in < unit.T_min - tolerance) | (traj.T_in > unit.T_max + tolerance)
    bad_power = (traj.P_ac < 0) | (traj.P_ac > unit.P_max)
    bad_soc = traj.soc != soc_from_temp(traj.T_in, unit.T_min, unit.T_max)
    for name, mask in (("T_in", bad_temp), ("P_ac", bad_power), ("soc", bad_soc)):
        if np.any(mask):
            raise SimulationError(f"{name} invariant violated", step=int(np.flatnonzero(mask)[0]))


def write_trajectory_csv(traj: Trajectory, path: Union[str, Path]):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    traj.to_frame().to_csv(path, index=False, float_format="%.17g")


def read_trajectory_csv(path: Union[str, Path], unit_id: int) -> Trajectory:
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise IngestionError(f"{path}: missing column(s) {', '.join(missing)}")
    env = EnvSeries(
        t=pd.to_datetime(frame["timestamp"]).to_numpy(),
        T_out=frame["T_out"].to_numpy(),
        price=frame["price"].to_numpy(),
    )
    return Trajectory(
        unit_id=unit_id,
        env=env,
        T_in=frame["T_in"].to_numpy(),
        P_ac=frame["P_ac"].to_numpy(),
        soc=frame["soc"].to_numpy(),
    )
