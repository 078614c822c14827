"""
Cold start of a newly integrated unit: single-task training on its own data against
multi-task training alongside fully observed mature units, across data ratios α.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import pandas as pd
from loguru import logger

from vbnet.config.interface import SUPPORTED_FLEET_SIZES, ExperimentConfig
from vbnet.data.dataset import NormStats, SplitData, cold_start_subset
from vbnet.decorators import log_elapsed
from vbnet.errors import ConfigurationError, DomainError
from vbnet.experiments.metrics import rmse
from vbnet.experiments.pipeline import prepare_fleet, train_model
from vbnet.experiments.report import MetricReport, run_meta
from vbnet.helper import spawn_seeds

DEFAULT_ALPHAS = (0.02, 0.04, 0.06, 0.08, 0.10, 0.25, 0.50, 1.00)
METHODS = ("STL", "MTL")


def method_label(method: str, n_mature: int) -> str:
    return method if method == "STL" else f"MTL({n_mature}+1)"


def run_cell(
    config: ExperimentConfig,
    split: SplitData,
    n_mature: int,
    method: str,
    alpha: float,
    seed: int,
) -> Dict:
    """Trains one (method, α) model and scores it on the new unit's test horizon."""
    new_id = n_mature
    new_train = cold_start_subset(split.train[new_id], alpha)
    if method == "STL":
        train = new_train
    else:
        train = split.train_samples(list(range(n_mature))) + new_train
    stats = NormStats.fit(train)
    trainer, history = train_model("vbnet", n_mature + 1, config, train, stats, seed=seed)
    test = split.test[new_id]
    value = rmse(trainer.predict(test, stats), [s.S_true for s in test])
    logger.info(f"{method_label(method, n_mature)} α={alpha:.2f}: {len(new_train)} new-unit windows, RMSE {value:.3e}")
    return {
        "method": method_label(method, n_mature),
        "alpha": alpha,
        "n_new_train": len(new_train),
        "epochs": history.epochs_run,
        "rmse": value,
    }


def _run_cell_args(args):
    return run_cell(*args)


def case_b_checks(table: List[Dict], n_mature: int) -> Dict[str, bool]:
    stl = {row["alpha"]: row["rmse"] for row in table if row["method"] == "STL"}
    mtl = {row["alpha"]: row["rmse"] for row in table if row["method"] != "STL"}
    checks = {}
    if 1.0 in stl and any(a <= 0.25 for a in stl):
        checks["stl_cold_start_gap"] = all(
            v >= 10 * stl[1.0] for a, v in stl.items() if a <= 0.25
        )
    if 1.0 in stl and 1.0 in mtl:
        ratio = stl[1.0] / mtl[1.0]
        checks["full_data_same_order"] = bool(0.1 <= ratio <= 10)
    if 1.0 in mtl:
        if n_mature == 3 and 0.02 in mtl:
            checks["mtl_2pct_within_2x"] = mtl[0.02] <= 2 * mtl[1.0]
        if n_mature == 7 and 0.06 in mtl:
            checks["mtl_6pct_within_2x"] = mtl[0.06] <= 2 * mtl[1.0]
    if n_mature == 7 and 0.02 in mtl and 0.04 in mtl:
        checks["mtl_imbalance_dip"] = mtl[0.02] > mtl[0.04]
    return checks


@log_elapsed("case B")
def run_case_b(
    config: ExperimentConfig,
    n_mature: int = 3,
    alphas: Sequence[float] = DEFAULT_ALPHAS,
    methods: Sequence[str] = METHODS,
    out_dir: Optional[Union[str, Path]] = None,
) -> MetricReport:
    """
    Fills the (method, α) grid of new-unit test RMSE.

    Cells are independent and seeded individually; with ``config.workers > 1`` they run
    in a process pool.
    """
    if n_mature + 1 not in SUPPORTED_FLEET_SIZES:
        raise ConfigurationError("mature", f"expected one of {[n - 1 for n in SUPPORTED_FLEET_SIZES]}")
    for method in methods:
        if method not in METHODS:
            raise ConfigurationError("methods", f"unknown method {method!r}")
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise DomainError("no data ratios to evaluate")
    for a in alphas:
        if not 0 < a <= 1:
            raise ConfigurationError("alphas", "0 < alpha ≤ 1")

    config = config.evolve(n_units=n_mature + 1)
    _, split = prepare_fleet(config)
    if not split.test[n_mature]:
        raise DomainError("the new unit has no test samples")

    cells = [(m, a) for m in methods for a in alphas]
    seeds = spawn_seeds(config.seed, *(f"{m}-{a}" for m, a in cells))
    jobs = [(config, split, n_mature, m, a, seeds[f"{m}-{a}"]) for m, a in cells]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            table = list(pool.map(_run_cell_args, jobs))
    else:
        table = [run_cell(*job) for job in jobs]

    report = MetricReport(
        case="B",
        meta=run_meta(config, n_mature=n_mature, alphas=alphas),
        table=table,
        checks=case_b_checks(table, n_mature),
    )
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(table).to_csv(out_dir / f"case_b_mature{n_mature}.csv", index=False)
        report.write(out_dir)
    return report
