"""
Fleet-level SOC tracking: VB-NET against dense, convolutional and recurrent baselines on
four units, plus recovery of capacity, loss slope and sensitivity.
"""
from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd
from loguru import logger

from vbnet.config.interface import ExperimentConfig
from vbnet.data.dataset import FleetData, Sample, SplitData, make_batch
from vbnet.decorators import log_elapsed
from vbnet.errors import DomainError
from vbnet.experiments.metrics import ls_slope, r2_or_none, rmse
from vbnet.experiments.pipeline import prepare_fleet, save_model, train_model
from vbnet.experiments.report import MetricReport, UnitMetrics, run_meta
from vbnet.model.baselines import BASELINE_KINDS
from vbnet.model.vbnet import identify
from vbnet.physics.battery import oracle_params

METHODS = ("vbnet",) + BASELINE_KINDS
CASE_A_UNITS = 4
RMSE_TARGET = 0.02
SLOPE_TOLERANCE = 0.20
CAPACITY_TOLERANCE = 0.25
CAPACITY_RATIO_RANGE = (0.55, 0.80)


def _strictly_decreasing(values) -> bool:
    return all(a > b for a, b in zip(values[:-1], values[1:]))


def physical_analysis(model, split: SplitData, data: FleetData, seq_len: int) -> Dict[str, pd.DataFrame]:
    """
    Rolls the trained model over every test sample and tabulates what it identified next
    to the analytic oracle: loss against the temperature gap, capacity, sensitivity and
    the parameter time series.
    """
    samples = split.test_samples()
    batch = make_batch(samples, split.stats)
    out = model.rollout(batch)
    S_hat = out.S_hat.data
    S_prev = np.concatenate([batch.S0, S_hat[:, :-1]], axis=1)
    dT_phy = batch.drive_T_out - (batch.T_max - S_prev * batch.dT_range)
    units = {u.id: u for u in data.fleet.units}
    trajectories = {t.unit_id: t for t in data.trajectories}

    scatter, series = [], []
    for row, sample in enumerate(samples):
        unit, traj = units[sample.unit_id], trajectories[sample.unit_id]
        steps = np.arange(sample.start + seq_len - 1, sample.start + seq_len - 1 + S_hat.shape[1])
        oracle = oracle_params(unit, traj.env.T_out[steps], traj.T_in[steps]).P_loss
        for k, step in enumerate(steps):
            scatter.append((unit.id, dT_phy[row, k], out.P_loss_hat.data[row, k], oracle[k]))
            series.append((unit.id, int(step), out.P_loss_hat.data[row, k], out.C_f_hat.data[row, 0]))

    identified = identify(model, samples, split.stats)
    capacity = [
        (uid, p.C_f, units[uid].C_th * units[uid].dT_range, units[uid].dT_range)
        for uid, p in sorted(identified.items())
    ]
    gamma = [(uid, units[uid].R, p.gamma) for uid, p in sorted(identified.items())]
    return {
        "ploss_scatter": pd.DataFrame(scatter, columns=["unit_id", "dT_phy", "p_loss_hat", "p_loss_oracle"]),
        "params_timeseries": pd.DataFrame(series, columns=["unit_id", "hour", "p_loss_hat", "c_f_hat"]),
        "capacity": pd.DataFrame(capacity, columns=["unit_id", "c_f_hat", "c_f_oracle", "dT_range"]),
        "gamma": pd.DataFrame(gamma, columns=["unit_id", "R", "gamma"]),
        "identified": identified,
    }


def soc_tracking_frame(samples: List[Sample], predictions: Dict[str, np.ndarray]) -> pd.DataFrame:
    rows = []
    for i, sample in enumerate(samples):
        for k, s_true in enumerate(sample.S_true):
            rows.append(
                (sample.unit_id, i, k, s_true, *(predictions[m][i, k] for m in METHODS))
            )
    return pd.DataFrame(rows, columns=["unit_id", "sample", "step", "s_true", *METHODS])


def case_a_checks(units: List[UnitMetrics]) -> Dict[str, bool]:
    by_id = {u.unit_id: u for u in units}
    slopes = [u.slope for u in units]
    checks = {
        "vbnet_rmse_below_target": all(u.rmse["vbnet"] < RMSE_TARGET for u in units),
        "vbnet_beats_every_baseline": all(
            u.rmse["vbnet"] < u.rmse[kind] for u in units for kind in BASELINE_KINDS
        ),
        "loss_slope_within_tolerance": all(
            abs(u.slope - u.slope_oracle) <= SLOPE_TOLERANCE * u.slope_oracle for u in units
        ),
        "loss_slope_inverse_to_R": _strictly_decreasing(slopes),
        "capacity_within_tolerance": all(
            abs(u.C_f_hat - u.C_f_oracle) <= CAPACITY_TOLERANCE * u.C_f_oracle for u in units
        ),
        "gamma_strictly_decreasing": _strictly_decreasing([u.gamma for u in units]),
    }
    if 0 in by_id and 1 in by_id:
        ratio = by_id[1].C_f_hat / by_id[0].C_f_hat
        lo, hi = CAPACITY_RATIO_RANGE
        checks["capacity_ratio_ac2_ac1"] = bool(lo <= ratio <= hi)
    return checks


@log_elapsed("case A")
def run_case_a(config: ExperimentConfig, out_dir: Optional[Union[str, Path]] = None) -> MetricReport:
    """
    Trains VB-NET and the three baselines on the same four-unit split and evaluates
    them on the chronological test set.

    Args:
        config: Experiment configuration; ``n_units`` is forced to 4.
        out_dir: Where ``report.json``, the plot-data CSVs and checkpoints go; nothing
            is written when omitted.
    """
    if config.n_units != CASE_A_UNITS:
        logger.warning(f"case A runs on {CASE_A_UNITS} units; ignoring n_units={config.n_units}")
        config = config.evolve(n_units=CASE_A_UNITS)
    data, split = prepare_fleet(config)
    train, test = split.train_samples(), split.test_samples()
    if not test:
        raise DomainError("the chronological split left no test samples")
    logger.info(f"case A: {len(train)} train / {len(test)} test samples over {len(data.fleet)} units")

    trainers = {}
    for kind in METHODS:
        trainers[kind], _ = train_model(kind, len(data.fleet), config, train, split.stats)
    predictions = {kind: trainers[kind].predict(test, split.stats) for kind in METHODS}

    analysis = physical_analysis(trainers["vbnet"].model, split, data, config.seq_len)
    capacity = analysis["capacity"].set_index("unit_id")
    gamma = analysis["gamma"].set_index("unit_id")
    scatter = analysis["ploss_scatter"]

    test_ids = np.array([s.unit_id for s in test])
    truth = np.stack([s.S_true for s in test])
    units = []
    for unit in data.fleet.units:
        rows = test_ids == unit.id
        unit_scatter = scatter[scatter["unit_id"] == unit.id]
        units.append(
            UnitMetrics(
                unit_id=unit.id,
                name=unit.name,
                rmse={m: rmse(predictions[m][rows], truth[rows]) for m in METHODS},
                r2={m: r2_or_none(predictions[m][rows], truth[rows]) for m in METHODS},
                C_f_hat=float(capacity.loc[unit.id, "c_f_hat"]),
                C_f_oracle=float(capacity.loc[unit.id, "c_f_oracle"]),
                gamma=float(gamma.loc[unit.id, "gamma"]),
                slope=ls_slope(unit_scatter["dT_phy"], unit_scatter["p_loss_hat"]),
                slope_oracle=1.0 / unit.R,
            )
        )
    aggregate = {
        m: {"rmse": rmse(predictions[m], truth), "r2": r2_or_none(predictions[m], truth)}
        for m in METHODS
    }
    report = MetricReport(
        case="A",
        meta=run_meta(config, n_units=len(data.fleet), n_train=len(train), n_test=len(test)),
        units=units,
        aggregate=aggregate,
        checks=case_a_checks(units),
        params=[p.to_report() for _, p in sorted(analysis["identified"].items())],
    )

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        soc_tracking_frame(test, predictions).to_csv(out_dir / "soc_tracking.csv", index=False)
        for name in ("ploss_scatter", "capacity", "gamma", "params_timeseries"):
            analysis[name].to_csv(out_dir / f"{name}.csv", index=False)
        for kind, trainer in trainers.items():
            save_model(
                out_dir / "checkpoints" / f"{kind}.msgpack",
                kind,
                trainer.model,
                config,
                split.stats,
                len(data.fleet),
            )
        report.write(out_dir)
        logger.info(f"case A artifacts written to {out_dir}")
    return report
