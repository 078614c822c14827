"""
Exogenous drivers: synthetic summer weather with a time-of-use tariff, and a CSV importer
for measured series.
"""
import math
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd
from loguru import logger

from vbnet.errors import DomainError, IngestionError
from vbnet.physics.thermal import EnvSeries

ENV_COLUMNS = ["timestamp", "T_out", "price"]

T_MEAN = 29.0
T_AMPLITUDE = 4.0
T_PEAK_HOUR = 15
AR_PHI = 0.7

OFF_PEAK, SHOULDER, PEAK = 0.30, 0.70, 1.10
# hour of day -> tariff level
TOU_LEVELS = np.array(
    [OFF_PEAK] * 8
    + [SHOULDER] * 2
    + [PEAK] * 2
    + [SHOULDER] * 2
    + [PEAK] * 5
    + [SHOULDER] * 5
)


def synth_env(
    days: int,
    seed: int = 0,
    start: str = "2023-07-01",
    temp_noise: float = 0.8,
    price_noise: float = 0.02,
) -> EnvSeries:
    """
    Diurnal outdoor temperature with AR(1) weather noise and a three-level tariff.

    Args:
        days: Number of days (≥ 2).
        seed: Seed of the noise stream.
        start: First timestamp (midnight).
        temp_noise: Innovation std of the AR(1) temperature noise, °C.
        price_noise: Relative std of the multiplicative price noise.
    """
    if days < 2:
        raise DomainError("days ≥ 2")
    n = days * 24
    rng = np.random.default_rng(seed)
    hours = np.arange(n) % 24

    noise = np.zeros(n)
    innovations = rng.normal(0.0, 1.0, size=n) * temp_noise
    for i in range(1, n):
        noise[i] = AR_PHI * noise[i - 1] + innovations[i]
    T_out = T_MEAN + T_AMPLITUDE * np.cos(2 * math.pi * (hours - T_PEAK_HOUR) / 24) + noise

    price = TOU_LEVELS[hours] * (1.0 + price_noise * rng.normal(0.0, 1.0, size=n))

    t = np.datetime64(start, "h") + np.arange(n).astype("timedelta64[h]")
    return EnvSeries(t=t, T_out=T_out, price=price)


def export_env_csv(env: EnvSeries, path: Union[str, Path]):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        {
            "timestamp": pd.to_datetime(env.t.astype("datetime64[s]")),
            "T_out": env.T_out,
            "price": env.price,
        },
        columns=ENV_COLUMNS,
    )
    frame.to_csv(path, index=False, float_format="%.17g")


def import_env_csv(path: Union[str, Path]) -> EnvSeries:
    """
    Reads ``timestamp,T_out,price`` rows; rows must be hourly without gaps.

    Raises:
        IngestionError: missing columns, unparsable or non-finite values, or gaps, with the
            offending data row (0-based, header excluded).
    """
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise IngestionError(f"cannot read {path}: {e}") from None

    for column in ENV_COLUMNS:
        if column not in frame.columns:
            raise IngestionError(f"missing column '{column}'")

    t = pd.to_datetime(frame["timestamp"], errors="coerce")
    if t.isna().any():
        raise IngestionError("unparsable timestamp", row=int(np.flatnonzero(t.isna())[0]))

    values = {}
    for column in ("T_out", "price"):
        series = pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=np.float64)
        bad = ~np.isfinite(series)
        if bad.any():
            raise IngestionError(f"non-finite {column}", row=int(np.flatnonzero(bad)[0]))
        values[column] = series

    hours = t.to_numpy().astype("datetime64[h]")
    steps = np.diff(hours).astype(np.int64)
    if np.any(steps != 1):
        row = int(np.flatnonzero(steps != 1)[0]) + 1
        raise IngestionError(f"expected hourly rows, found a {steps[row - 1]} h step", row=row)

    logger.info(f"imported {len(hours)} hourly rows from {path}")
    return EnvSeries(t=hours, T_out=values["T_out"], price=values["price"])
