from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import attrs
import yaml
from attrs import asdict, define, field

from vbnet.errors import ConfigurationError

W_PER_KW = 1e3
DEFAULT_C_TH = 1.8e7
DEFAULT_ETA = 0.97

# (R °C/kW, P_max kW, T_min °C, T_max °C) for AC1..AC8
AC_TABLE: Tuple[Tuple[float, float, float, float], ...] = (
    (3.0, 12.0, 21.0, 24.0),
    (3.5, 12.0, 22.0, 24.0),
    (5.0, 13.0, 21.0, 24.0),
    (6.0, 10.0, 20.0, 23.0),
    (5.0, 12.0, 21.0, 24.0),
    (5.5, 11.0, 22.0, 25.0),
    (6.5, 10.0, 20.0, 22.0),
    (6.0, 12.0, 20.0, 23.0),
)
SUPPORTED_FLEET_SIZES = (4, 8)


class Base:
    def to_dict(self, drop_none=True):
        if drop_none:

            def custom_filter(attribute, value):
                return value is not None

            return asdict(self, filter=custom_filter)
        return asdict(self)


def _check(key: str, ok: bool, message: str):
    if not ok:
        raise ConfigurationError(key, message)


@define(slots=True, frozen=True)
class AcUnitSpec(Base):
    """Physical and comfort parameters of one air-conditioned zone (Table units: kW, °C/kW)."""

    id: int
    R: float
    C_th: float = DEFAULT_C_TH
    eta: float = DEFAULT_ETA
    P_max: float = 12.0
    T_min: float = 21.0
    T_max: float = 24.0

    def __attrs_post_init__(self):
        _check("R", self.R > 0, "R > 0")
        _check("C_th", self.C_th > 0, "C_th > 0")
        _check("eta", 0 < self.eta <= 10, "0 < eta ≤ 10")
        _check("P_max", self.P_max > 0, "P_max > 0")
        _check("T_min", self.T_min < self.T_max, "T_min < T_max")

    @property
    def name(self) -> str:
        return f"AC{self.id + 1}"

    @property
    def dT_range(self) -> float:
        return self.T_max - self.T_min

    @property
    def tau(self) -> float:
        """Envelope time constant R·C_th in seconds."""
        return self.R / W_PER_KW * self.C_th


@define(slots=True, frozen=True)
class FleetSpec(Base):
    units: List[AcUnitSpec]
    horizon: int = 92 * 24
    dt: float = 3600.0

    def __attrs_post_init__(self):
        ids = [u.id for u in self.units]
        _check("units", ids == list(range(len(ids))), "unit ids must be contiguous from 0")
        _check("dt", self.dt > 0, "dt > 0")
        _check("horizon", self.horizon > 0, "horizon > 0")

    def __len__(self):
        return len(self.units)

    def __getitem__(self, unit_id: int) -> AcUnitSpec:
        return self.units[unit_id]


def default_fleet(n_units: int = 4, horizon: int = 92 * 24, dt: float = 3600.0) -> FleetSpec:
    """
    First ``n_units`` rows of the reference fleet, all with C_th = 1.8e7 J/°C and η = 0.97.
    """
    _check("n_units", n_units in SUPPORTED_FLEET_SIZES, f"n_units ∈ {set(SUPPORTED_FLEET_SIZES)}")
    units = [
        AcUnitSpec(id=i, R=R, P_max=P_max, T_min=T_min, T_max=T_max)
        for i, (R, P_max, T_min, T_max) in enumerate(AC_TABLE[:n_units])
    ]
    return FleetSpec(units=units, horizon=horizon, dt=dt)


@define(slots=True, frozen=True)
class ExperimentConfig(Base):
    seq_len: int = 24
    rollout_len: int = 24
    stride: int = 24
    hidden_dim: int = 64
    id_embed_dim: int = 8
    cap_bounds: Tuple[float, float] = field(default=(1e7, 2e8), converter=tuple)
    lambda_: float = 1.0
    gamma_init: float = 0.5
    lr: float = 1e-3
    batch_size: int = 64
    epochs: int = 200
    patience: int = 20
    alpha: float = 1.0
    seed: int = 0
    train_frac: float = 0.8
    val_frac: float = 0.1
    days: int = 92
    n_units: int = 4
    substeps: int = 6
    dt: float = 3600.0
    temp_noise: float = 0.8
    price_noise: float = 0.02
    workers: int = 1

    def __attrs_post_init__(self):
        _check("alpha", 0 < self.alpha <= 1, "0 < alpha ≤ 1")
        _check("cap_bounds", len(self.cap_bounds) == 2, "expected [C_min, C_max]")
        _check("cap_bounds", 0 < self.cap_bounds[0] < self.cap_bounds[1], "0 < C_min < C_max")
        _check("lambda", self.lambda_ >= 0, "lambda ≥ 0")
        _check("train_frac", 0 < self.train_frac <= 1, "0 < train_frac ≤ 1")
        _check("val_frac", 0 <= self.val_frac < 1, "0 ≤ val_frac < 1")
        _check("n_units", self.n_units in SUPPORTED_FLEET_SIZES, "n_units ∈ {4, 8}")
        _check("days", self.days >= 2, "days ≥ 2")
        _check("dt", self.dt > 0, "dt > 0")
        _check("lr", self.lr >= 0, "lr ≥ 0")
        _check("temp_noise", self.temp_noise >= 0, "temp_noise ≥ 0")
        _check("price_noise", self.price_noise >= 0, "price_noise ≥ 0")
        for key in (
            "seq_len",
            "rollout_len",
            "stride",
            "hidden_dim",
            "id_embed_dim",
            "batch_size",
            "epochs",
            "patience",
            "substeps",
            "workers",
        ):
            _check(key, int(getattr(self, key)) > 0, f"{key} > 0")
        _check("rollout_len", self.rollout_len >= 2, "rollout_len ≥ 2")

    @property
    def c_min(self) -> float:
        return float(self.cap_bounds[0])

    @property
    def c_max(self) -> float:
        return float(self.cap_bounds[1])

    def to_dict(self, drop_none=True):
        data = super().to_dict(drop_none=drop_none)
        data["lambda"] = data.pop("lambda_")
        data["cap_bounds"] = list(data["cap_bounds"])
        return data

    def evolve(self, **overrides) -> "ExperimentConfig":
        return attrs.evolve(self, **_normalize_keys(overrides))


_FIELD_TYPES = {a.name: a.type for a in attrs.fields(ExperimentConfig)}


def _normalize_keys(raw: Dict[str, Any]) -> Dict[str, Any]:
    values = {}
    for key, value in raw.items():
        name = key.replace("-", "_")
        name = "lambda_" if name == "lambda" else name
        if name not in _FIELD_TYPES:
            raise ConfigurationError(key, "unknown key")
        kind = _FIELD_TYPES[name]
        try:
            if kind is int:
                if isinstance(value, float) and not value.is_integer():
                    raise ValueError(value)
                value = int(value)
            elif kind is float:
                value = float(value)
            else:
                value = tuple(float(v) for v in value)
        except (TypeError, ValueError):
            raise ConfigurationError(key, f"cannot interpret {value!r}") from None
        values[name] = value
    return values


def is_config_key(key: str) -> bool:
    name = key.replace("-", "_")
    return ("lambda_" if name == "lambda" else name) in _FIELD_TYPES


def config_from_dict(raw: Dict[str, Any]) -> ExperimentConfig:
    return ExperimentConfig(**_normalize_keys(raw or {}))


def load_config(
    path: Union[str, Path, None] = None, defaults: Dict[str, Any] = None, **overrides
) -> ExperimentConfig:
    """
    Reads an experiment configuration file (JSON or YAML) and applies defaults for absent keys.

    Args:
        path: Config file; ``None`` means defaults only.
        defaults: Keys applied below the file, e.g. process settings.
        **overrides: Individual keys that take precedence over the file.

    Raises:
        ConfigurationError: on parse failures or invariant violations, naming the key.
    """
    raw: Dict[str, Any] = dict(defaults or {})
    if path is not None:
        try:
            with open(path) as f:
                loaded = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigurationError("<file>", f"cannot parse {path}: {e}") from None
        if not isinstance(loaded, dict):
            raise ConfigurationError("<file>", "expected a key-value mapping")
        raw.update(loaded)
    raw.update(overrides)
    return config_from_dict(raw)
