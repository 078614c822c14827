from __future__ import annotations

from typing import Dict, Optional

from loguru import logger

from vbnet.autodiff.gradcheck import check_primitives, grad_check
from vbnet.config.interface import ExperimentConfig
from vbnet.data.dataset import make_batch
from vbnet.experiments.pipeline import prepare_fleet
from vbnet.model.vbnet import VbNet, composite_loss

GRAD_TOLERANCE = 1e-4
PROBE_DAYS = 4


def check_model_gradients(
    config: ExperimentConfig,
    points: int = 10,
    max_entries: Optional[int] = 8,
    n_samples: int = 4,
) -> float:
    """
    Finite-difference check of the full composite loss at ``points`` random
    initializations, on a small batch drawn from a short simulated fleet.
    """
    probe_config = config.evolve(days=PROBE_DAYS)
    data, split = prepare_fleet(probe_config)
    samples = split.train_samples()[:n_samples]
    batch = make_batch(samples, split.stats)
    worst = 0.0
    for point in range(points):
        model = VbNet(len(data.fleet), probe_config, seed=config.seed + point)

        def loss():
            return composite_loss(model.soc(batch), batch.S_true, probe_config.lambda_)

        err = grad_check(loss, model.named_parameters(), max_entries=max_entries, seed=point)
        logger.debug(f"model gradient probe {point}: {err:.3e}")
        worst = max(worst, err)
    return worst


def gradient_report(
    config: ExperimentConfig, points: int = 10, max_entries: Optional[int] = 8
) -> Dict[str, float]:
    errors = {f"primitive.{k}": v for k, v in check_primitives(seed=config.seed).items()}
    errors["vbnet.composite_loss"] = check_model_gradients(config, points, max_entries)
    return errors
