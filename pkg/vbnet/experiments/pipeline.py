"""Shared steps of the experiment harnesses: fleet data, model construction, training."""
from __future__ import annotations

from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

from loguru import logger

from vbnet.autodiff.checkpoint import load_checkpoint, save_checkpoint
from vbnet.config.interface import ExperimentConfig, config_from_dict, default_fleet
from vbnet.data.dataset import (
    FleetData,
    NormStats,
    Sample,
    SplitData,
    simulate_fleet,
    split_fleet,
    validation_split,
)
from vbnet.data.weather import synth_env
from vbnet.errors import ConfigurationError
from vbnet.helper import spawn_seeds
from vbnet.model.baselines import build_baseline
from vbnet.model.trainer import Trainer, TrainHistory
from vbnet.model.vbnet import VbNet

SEED_STREAMS = ("weather", "init", "shuffle")


def seeds_for(config: ExperimentConfig) -> Dict[str, int]:
    return spawn_seeds(config.seed, *SEED_STREAMS)


def prepare_fleet(config: ExperimentConfig, n_units: Optional[int] = None) -> Tuple[FleetData, SplitData]:
    """Synthesizes weather, simulates the fleet and splits it chronologically."""
    n_units = n_units or config.n_units
    fleet = default_fleet(n_units, horizon=config.days * 24, dt=config.dt)
    env = synth_env(
        config.days,
        seed=seeds_for(config)["weather"],
        temp_noise=config.temp_noise,
        price_noise=config.price_noise,
    )
    data = simulate_fleet(fleet, env, dt=config.dt, substeps=config.substeps)
    return data, split_fleet(data, config)


def build_model(kind: str, n_units: int, config: ExperimentConfig, seed: Optional[int] = None):
    seed = seeds_for(config)["init"] if seed is None else seed
    if kind == "vbnet":
        return VbNet(n_units, config, seed=seed)
    return build_baseline(kind, n_units, config, seed=seed)


def train_model(
    kind: str,
    n_units: int,
    config: ExperimentConfig,
    train: Sequence[Sample],
    stats: NormStats,
    seed: Optional[int] = None,
) -> Tuple[Trainer, TrainHistory]:
    """
    Builds and trains one model; VB-NET uses the configured derivative-loss weight,
    baselines train on plain MSE.
    """
    seeds = seeds_for(config) if seed is None else spawn_seeds(seed, *SEED_STREAMS)
    model = build_model(kind, n_units, config, seed=seeds["init"])
    lam = config.lambda_ if kind == "vbnet" else 0.0
    trainer = Trainer(model, config, lam=lam, seed=seeds["shuffle"], name=kind)
    fit_samples, val_samples = validation_split(train, config.val_frac)
    history = trainer.fit(fit_samples, stats, val_samples)
    return trainer, history


def save_model(path, kind: str, model, config: ExperimentConfig, stats: NormStats, n_units: int) -> Path:
    meta = {
        "kind": kind,
        "n_units": n_units,
        "config": config.to_dict(),
        "norm_stats": stats.to_dict(),
    }
    return save_checkpoint(path, model.state_dict(), meta)


def load_model(path):
    """Returns ``(kind, model, config, stats)`` rebuilt from a checkpoint."""
    params, meta = load_checkpoint(path)
    try:
        kind, n_units = meta["kind"], int(meta["n_units"])
        config = config_from_dict(meta["config"])
        stats = NormStats.from_dict(meta["norm_stats"])
    except KeyError as e:
        raise ConfigurationError(str(e), f"checkpoint {path} lacks metadata") from None
    model = build_model(kind, n_units, config, seed=0)
    model.load_state_dict(params)
    logger.info(f"loaded {kind} with {model.num_parameters()} parameters from {path}")
    return kind, model, config, stats

