"""
Windowed samples, normalization, chronological and cold-start splits, and dataset
persistence (one CSV per unit plus a JSON manifest).

A sample starting at step ``s`` holds a context of steps ``s .. s+seq_len-1`` and a horizon
of the following ``rollout_len`` steps. ``S0`` is the SOC at the last context step; the k-th
rollout transition uses the drivers of step ``s+seq_len-1+k`` and lands on horizon step k.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from attrs import asdict, define, field
from loguru import logger

from vbnet.config.interface import AcUnitSpec, ExperimentConfig, FleetSpec
from vbnet.errors import DomainError, IngestionError
from vbnet.helper import json_dump, json_load
from vbnet.physics.thermal import (
    EnvSeries,
    Trajectory,
    read_trajectory_csv,
    simulate_unit,
    write_trajectory_csv,
)

STD_FLOOR = 1e-6
MANIFEST_NAME = "manifest.json"


def _ceil(x: float) -> int:
    return int(math.ceil(round(x, 9)))


def _float_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


@define(slots=True, frozen=True)
class Sample:
    unit_id: int
    start: int
    context_T_out: np.ndarray = field(converter=_float_array)
    context_T_in: np.ndarray = field(converter=_float_array)
    context_P_ac: np.ndarray = field(converter=_float_array)
    horizon_T_out: np.ndarray = field(converter=_float_array)
    horizon_P_ac: np.ndarray = field(converter=_float_array)
    S0: float
    S_true: np.ndarray = field(converter=_float_array)
    mu_Tin: float
    sigma_Tin: float
    dT_range: float
    T_max: float
    eta: float

    @property
    def seq_len(self) -> int:
        return len(self.context_T_out)

    @property
    def rollout_len(self) -> int:
        return len(self.horizon_T_out)

    @property
    def drive_T_out(self) -> np.ndarray:
        """Outdoor temperature of the steps that drive the rollout transitions."""
        return np.concatenate([self.context_T_out[-1:], self.horizon_T_out[:-1]])

    @property
    def drive_P_ac(self) -> np.ndarray:
        return np.concatenate([self.context_P_ac[-1:], self.horizon_P_ac[:-1]])


@define(slots=True, frozen=True)
class NormStats:
    """Per-feature mean/std fitted on training contexts only."""

    T_out_mean: float
    T_out_std: float
    T_in_mean: float
    T_in_std: float
    P_ac_mean: float
    P_ac_std: float

    @classmethod
    def fit(cls, samples: Sequence[Sample]) -> "NormStats":
        if not samples:
            raise DomainError("cannot fit normalization statistics on an empty split")
        T_out = np.concatenate([s.context_T_out for s in samples])
        T_in = np.concatenate([s.context_T_in for s in samples])
        P_ac = np.concatenate([s.context_P_ac for s in samples])
        return cls(
            T_out_mean=float(T_out.mean()),
            T_out_std=max(float(T_out.std()), STD_FLOOR),
            T_in_mean=float(T_in.mean()),
            T_in_std=max(float(T_in.std()), STD_FLOOR),
            P_ac_mean=float(P_ac.mean()),
            P_ac_std=max(float(P_ac.std()), STD_FLOOR),
        )

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, float]) -> "NormStats":
        return cls(**{k: float(v) for k, v in data.items()})


@define(slots=True, frozen=True)
class Batch:
    """
    Model-ready arrays for a list of samples.

    Everything a model may read is here; the horizon indoor temperature is
    absent.
    """

    unit_ids: np.ndarray
    x_env: np.ndarray  # (B, L) standardized context T_out
    x_tin: np.ndarray  # (B, L) standardized context T_in
    x_power: np.ndarray  # (B, L) standardized context P_ac
    x_power_last: np.ndarray  # (B, 1)
    mu: np.ndarray  # (B, 1)
    sigma: np.ndarray  # (B, 1)
    h_T_out: np.ndarray  # (B, H) standardized horizon T_out
    h_P_ac: np.ndarray  # (B, H) standardized horizon P_ac
    drive_T_out: np.ndarray  # (B, H) raw °C
    drive_P_ac: np.ndarray  # (B, H) raw kW
    S0: np.ndarray  # (B, 1)
    dT_range: np.ndarray  # (B, 1)
    T_max: np.ndarray  # (B, 1)
    eta: np.ndarray  # (B, 1)
    S_true: np.ndarray  # (B, H)

    def __len__(self):
        return len(self.unit_ids)

    def subset(self, index) -> "Batch":
        return Batch(**{name: value[index] for name, value in asdict(self, recurse=False).items()})


def make_batch(samples: Sequence[Sample], stats: NormStats) -> Batch:
    def stack(attr):
        return np.stack([getattr(s, attr) for s in samples])

    def column(attr):
        return np.array([[getattr(s, attr)] for s in samples], dtype=np.float64)

    P_ac = stack("context_P_ac")
    return Batch(
        unit_ids=np.array([s.unit_id for s in samples], dtype=np.int64),
        x_env=(stack("context_T_out") - stats.T_out_mean) / stats.T_out_std,
        x_tin=(stack("context_T_in") - stats.T_in_mean) / stats.T_in_std,
        x_power=(P_ac - stats.P_ac_mean) / stats.P_ac_std,
        x_power_last=(P_ac[:, -1:] - stats.P_ac_mean) / stats.P_ac_std,
        mu=(column("mu_Tin") - stats.T_in_mean) / stats.T_in_std,
        sigma=column("sigma_Tin") / stats.T_in_std,
        h_T_out=(stack("horizon_T_out") - stats.T_out_mean) / stats.T_out_std,
        h_P_ac=(stack("horizon_P_ac") - stats.P_ac_mean) / stats.P_ac_std,
        drive_T_out=np.stack([s.drive_T_out for s in samples]),
        drive_P_ac=np.stack([s.drive_P_ac for s in samples]),
        S0=column("S0"),
        dT_range=column("dT_range"),
        T_max=column("T_max"),
        eta=column("eta"),
        S_true=stack("S_true"),
    )


def make_samples(
    traj: Trajectory,
    unit: AcUnitSpec,
    seq_len: int = 24,
    rollout_len: int = 24,
    stride: int = 24,
) -> List[Sample]:
    """Slides a context+horizon window over ``traj``; an empty list (with a warning) if too short."""
    window = seq_len + rollout_len
    n = len(traj)
    if n < window:
        logger.warning(
            f"{unit.name}: trajectory of {n} steps is shorter than one window ({window})"
        )
        return []

    samples = []
    for s in range(0, n - window + 1, stride):
        ctx = slice(s, s + seq_len)
        hor = slice(s + seq_len, s + window)
        T_in_ctx = traj.T_in[ctx]
        samples.append(
            Sample(
                unit_id=traj.unit_id,
                start=s,
                context_T_out=traj.env.T_out[ctx],
                context_T_in=T_in_ctx,
                context_P_ac=traj.P_ac[ctx],
                horizon_T_out=traj.env.T_out[hor],
                horizon_P_ac=traj.P_ac[hor],
                S0=float(traj.soc[s + seq_len - 1]),
                S_true=traj.soc[hor],
                mu_Tin=float(T_in_ctx.mean()),
                sigma_Tin=float(T_in_ctx.std()),
                dT_range=unit.dT_range,
                T_max=unit.T_max,
                eta=unit.eta,
            )
        )
    return samples


def chrono_split(samples: Sequence[Sample], train_frac: float = 0.8) -> Tuple[List, List]:
    """First ⌈train_frac·n⌉ samples train, the rest test; order is preserved."""
    if not 0 < train_frac <= 1:
        raise DomainError("0 < train_frac ≤ 1")
    n_train = _ceil(train_frac * len(samples))
    return list(samples[:n_train]), list(samples[n_train:])


def cold_start_subset(samples: Sequence[Sample], alpha: float) -> List[Sample]:
    """The most recent ⌈alpha·n⌉ samples of a newly integrated unit."""
    if not 0 < alpha <= 1:
        raise DomainError("0 < alpha ≤ 1")
    n_keep = _ceil(alpha * len(samples))
    if n_keep == 0:
        raise DomainError(f"alpha={alpha} leaves no samples out of {len(samples)}")
    return list(samples[len(samples) - n_keep :])


def validation_split(samples: Sequence[Sample], val_frac: float) -> Tuple[List, List]:
    """Per unit, moves the chronologically last ⌊val_frac·n⌋ samples to validation."""
    by_unit: Dict[int, List[Sample]] = {}
    for s in samples:
        by_unit.setdefault(s.unit_id, []).append(s)
    train, val = [], []
    for unit_samples in by_unit.values():
        n_val = int(math.floor(round(val_frac * len(unit_samples), 9)))
        n_val = min(n_val, len(unit_samples) - 1)
        cut = len(unit_samples) - n_val
        train.extend(unit_samples[:cut])
        val.extend(unit_samples[cut:])
    return train, val


@define(slots=True)
class FleetData:
    fleet: FleetSpec
    env: EnvSeries
    trajectories: List[Trajectory]


def simulate_fleet(fleet: FleetSpec, env: EnvSeries, dt: float = 3600.0, substeps: int = 6) -> FleetData:
    trajectories = []
    for unit in fleet.units:
        T_init = 0.5 * (unit.T_min + unit.T_max)
        trajectories.append(simulate_unit(unit, env, T_init, dt=dt, substeps=substeps))
    logger.info(f"simulated {len(fleet)} units over {len(env)} hours")
    return FleetData(fleet=fleet, env=env, trajectories=trajectories)


@define(slots=True)
class SplitData:
    train: Dict[int, List[Sample]]
    test: Dict[int, List[Sample]]
    stats: NormStats

    def train_samples(self, unit_ids=None) -> List[Sample]:
        return _flatten(self.train, unit_ids)

    def test_samples(self, unit_ids=None) -> List[Sample]:
        return _flatten(self.test, unit_ids)


def _flatten(by_unit: Dict[int, List[Sample]], unit_ids=None) -> List[Sample]:
    ids = sorted(by_unit) if unit_ids is None else unit_ids
    return [s for uid in ids for s in by_unit[uid]]


def split_fleet(data: FleetData, config: ExperimentConfig) -> SplitData:
    """Windows every unit, splits each chronologically, and fits NormStats on train only."""
    train, test = {}, {}
    for unit, traj in zip(data.fleet.units, data.trajectories):
        samples = make_samples(traj, unit, config.seq_len, config.rollout_len, config.stride)
        train[unit.id], test[unit.id] = chrono_split(samples, config.train_frac)
    stats = NormStats.fit(_flatten(train))
    return SplitData(train=train, test=test, stats=stats)


def write_dataset(
    data: FleetData, out_dir: Union[str, Path], config: ExperimentConfig, split: SplitData = None
) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    split = split or split_fleet(data, config)
    for traj in data.trajectories:
        write_trajectory_csv(traj, out_dir / f"unit_{traj.unit_id}.csv")
    manifest = {
        "units": [u.to_dict() for u in data.fleet.units],
        "seq_len": config.seq_len,
        "rollout_len": config.rollout_len,
        "stride": config.stride,
        "dt": data.fleet.dt,
        "split_index": {str(uid): len(samples) for uid, samples in split.train.items()},
        "norm_stats": split.stats.to_dict(),
    }
    json_dump(manifest, out_dir / MANIFEST_NAME, indent_2=True)
    return out_dir


def read_dataset(data_dir: Union[str, Path]) -> Tuple[FleetData, Dict]:
    data_dir = Path(data_dir)
    manifest_path = data_dir / MANIFEST_NAME
    if not manifest_path.exists():
        raise IngestionError(f"no {MANIFEST_NAME} in {data_dir}")
    manifest = json_load(manifest_path)
    units = [AcUnitSpec(**u) for u in manifest["units"]]
    trajectories = [read_trajectory_csv(data_dir / f"unit_{u.id}.csv", u.id) for u in units]
    env = trajectories[0].env
    fleet = FleetSpec(units=units, horizon=len(env), dt=manifest.get("dt", 3600.0))
    return FleetData(fleet=fleet, env=env, trajectories=trajectories), manifest
