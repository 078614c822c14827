import os
import sys

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))

import numpy as np
import pytest

from vbnet.config.interface import ExperimentConfig, default_fleet
from vbnet.data.weather import synth_env
from vbnet.physics.thermal import simulate_unit


@pytest.fixture(scope="session")
def fleet4():
    return default_fleet(4)


@pytest.fixture(scope="session")
def small_config():
    return ExperimentConfig(days=10, epochs=3, batch_size=16, patience=2)


@pytest.fixture(scope="session")
def small_split(small_config):
    from vbnet.experiments.pipeline import prepare_fleet

    return prepare_fleet(small_config)


@pytest.fixture(scope="session")
def euler_trajectory(fleet4):
    """AC1 driven by noise-free weather with a single explicit step per hour; stays in band."""
    env = synth_env(42, seed=3, temp_noise=0.0)
    return simulate_unit(fleet4[0], env, 22.5, substeps=1, integrator="euler")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def pytest_collection_modifyitems(config, items):
    if os.environ.get("VBNET_ACCEPTANCE"):
        return
    skip = pytest.mark.skip(reason="full-scale run; set VBNET_ACCEPTANCE=1")
    for item in items:
        if "acceptance" in item.keywords:
            item.add_marker(skip)
