from pathlib import Path

import pytest

from vbnet.config.interface import (
    AcUnitSpec,
    ExperimentConfig,
    FleetSpec,
    config_from_dict,
    default_fleet,
    load_config,
)
from vbnet.errors import ConfigurationError


def test_default_fleet_of_four(fleet4):
    assert len(fleet4) == 4
    ac1, ac4 = fleet4[0], fleet4[3]
    assert (ac1.R, ac1.P_max, ac1.T_min, ac1.T_max) == (3.0, 12.0, 21.0, 24.0)
    assert (ac4.R, ac4.P_max, ac4.T_min, ac4.T_max) == (6.0, 10.0, 20.0, 23.0)
    assert all(u.C_th == 1.8e7 and u.eta == 0.97 for u in fleet4.units)


def test_default_fleet_of_eight():
    fleet = default_fleet(8)
    ac8 = fleet[7]
    assert ac8.name == "AC8"
    assert (ac8.R, ac8.P_max, ac8.T_min, ac8.T_max) == (6.0, 12.0, 20.0, 23.0)
    assert [u.id for u in fleet.units] == list(range(8))


@pytest.mark.parametrize("n", [0, 3, 5, 9])
def test_default_fleet_rejects_unsupported_size(n):
    with pytest.raises(ConfigurationError, match="n_units"):
        default_fleet(n)


def test_time_constants_within_table_range():
    for unit in default_fleet(8).units:
        assert 5.4e4 <= unit.tau <= 1.17e5


@pytest.mark.parametrize(
    "kwargs, key",
    [
        (dict(R=0.0), "R"),
        (dict(R=3.0, C_th=-1.0), "C_th"),
        (dict(R=3.0, eta=11.0), "eta"),
        (dict(R=3.0, P_max=0.0), "P_max"),
        (dict(R=3.0, T_min=24.0, T_max=24.0), "T_min"),
    ],
)
def test_unit_invariants(kwargs, key):
    with pytest.raises(ConfigurationError) as e:
        AcUnitSpec(id=0, **kwargs)
    assert e.value.key == key


def test_fleet_ids_must_be_contiguous():
    units = [AcUnitSpec(id=0, R=3.0), AcUnitSpec(id=2, R=3.0)]
    with pytest.raises(ConfigurationError, match="contiguous"):
        FleetSpec(units=units)


def test_empty_config_file_gives_defaults(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("")
    config = load_config(path)
    assert config == ExperimentConfig()
    assert config.hidden_dim == 64
    assert config.lambda_ == 1.0
    assert (config.c_min, config.c_max) == (1e7, 2e8)


def test_negative_lambda_is_rejected(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"lambda": -1}')
    with pytest.raises(ConfigurationError, match="lambda ≥ 0") as e:
        load_config(path)
    assert e.value.key == "lambda"


def test_alpha_from_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"alpha": 0.02, "cap_bounds": [1e7, 1e8]}')
    config = load_config(path)
    assert config.alpha == 0.02
    assert config.cap_bounds == (1e7, 1e8)


def test_yaml_config_and_overrides(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("epochs: 5\nlr: 0.01\n")
    config = load_config(path, epochs=7, **{"batch-size": 8})
    assert config.epochs == 7
    assert config.lr == 0.01
    assert config.batch_size == 8


@pytest.mark.parametrize(
    "raw, key",
    [
        ({"alpha": 0}, "alpha"),
        ({"alpha": 1.5}, "alpha"),
        ({"cap_bounds": [2e8, 1e7]}, "cap_bounds"),
        ({"no_such_key": 1}, "no_such_key"),
        ({"epochs": "many"}, "epochs"),
        ({"n_units": 5}, "n_units"),
    ],
)
def test_invalid_keys_are_named(raw, key):
    with pytest.raises(ConfigurationError) as e:
        config_from_dict(raw)
    assert e.value.key == key


def test_unparsable_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_to_dict_round_trip():
    config = ExperimentConfig(lambda_=0.5, seed=3)
    data = config.to_dict()
    assert data["lambda"] == 0.5
    assert config_from_dict(data) == config


def test_evolve_keeps_validation():
    config = ExperimentConfig()
    assert config.evolve(days=4).days == 4
    with pytest.raises(ConfigurationError):
        config.evolve(days=1)


def test_example_config_matches_defaults():
    example = Path(__file__).parent.parent / "vbnet-config.example.yaml"
    assert load_config(example) == ExperimentConfig()
