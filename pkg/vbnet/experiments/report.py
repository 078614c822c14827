from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from attrs import define, field

from vbnet import __version__
from vbnet.config.interface import Base, ExperimentConfig
from vbnet.errors import DomainError, IngestionError
from vbnet.helper import json_dump, json_load, stable_hash

REPORT_NAME = "report.json"


@define(slots=True)
class UnitMetrics(Base):
    unit_id: int
    name: str
    rmse: Dict[str, float] = field(factory=dict)
    r2: Dict[str, Optional[float]] = field(factory=dict)
    C_f_hat: Optional[float] = None
    C_f_oracle: Optional[float] = None
    gamma: Optional[float] = None
    slope: Optional[float] = None
    slope_oracle: Optional[float] = None

    def __attrs_post_init__(self):
        for method, value in self.rmse.items():
            if value < 0:
                raise DomainError(f"{self.name}: negative RMSE for {method}")
        for method, value in self.r2.items():
            if value is not None and value > 1 + 1e-12:
                raise DomainError(f"{self.name}: R² above 1 for {method}")


@define(slots=True)
class MetricReport(Base):
    """Machine-readable outcome of one harness run."""

    case: str
    meta: Dict[str, Any]
    units: List[UnitMetrics] = field(factory=list)
    aggregate: Dict[str, Dict[str, Optional[float]]] = field(factory=dict)
    table: List[Dict[str, Any]] = field(factory=list)
    checks: Dict[str, bool] = field(factory=dict)
    params: List[Dict[str, Any]] = field(factory=list)

    def to_dict(self, drop_none=False):
        return super().to_dict(drop_none=drop_none)

    def write(self, out_dir: Union[str, Path]) -> Path:
        path = Path(out_dir) / REPORT_NAME
        json_dump(self.to_dict(), path, indent_2=True)
        return path


def run_meta(config: ExperimentConfig, **extra) -> Dict[str, Any]:
    """Run metadata; no timestamps so identical runs give identical reports."""
    return {
        "version": __version__,
        "seed": config.seed,
        "config_hash": stable_hash(config.to_dict()),
        "config": config.to_dict(),
        **extra,
    }


def load_report(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_NAME
    if not path.exists():
        raise IngestionError(f"no report at {path}")
    return json_load(path)
