import math

import pandas as pd
import pytest

from vbnet.config.interface import ExperimentConfig
from vbnet.errors import ConfigurationError
from vbnet.experiments.case_a import METHODS, case_a_checks, run_case_a
from vbnet.experiments.case_b import case_b_checks, run_case_b
from vbnet.experiments.gradients import gradient_report
from vbnet.experiments.report import UnitMetrics, load_report

TINY = ExperimentConfig(days=10, epochs=2, batch_size=16, patience=2)


def _unit(uid, vbnet_rmse, slope, C_f, gamma):
    return UnitMetrics(
        unit_id=uid,
        name=f"AC{uid + 1}",
        rmse={"vbnet": vbnet_rmse, "dense": 0.05, "conv": 0.05, "recurrent": 0.05},
        C_f_hat=C_f,
        C_f_oracle=5.4e7 if uid != 1 else 3.6e7,
        gamma=gamma,
        slope=slope,
        slope_oracle=[1 / 3, 1 / 3.5, 1 / 5, 1 / 6][uid],
    )


def test_case_a_checks_hold_on_oracle_like_results():
    units = [
        _unit(0, 0.01, 0.33, 5.4e7, 0.9),
        _unit(1, 0.01, 0.26, 3.7e7, 0.7),
        _unit(2, 0.01, 0.2, 5.2e7, 0.5),
        _unit(3, 0.01, 0.17, 5.5e7, 0.3),
    ]
    checks = case_a_checks(units)
    assert all(checks.values())
    assert len(checks) == 7


def test_case_a_checks_flag_a_broken_ordering():
    units = [
        _unit(0, 0.01, 0.33, 5.4e7, 0.3),
        _unit(1, 0.06, 0.26, 5.4e7, 0.7),
        _unit(2, 0.01, 0.2, 5.2e7, 0.5),
        _unit(3, 0.01, 0.17, 5.5e7, 0.9),
    ]
    checks = case_a_checks(units)
    assert not checks["gamma_strictly_decreasing"]
    assert not checks["vbnet_rmse_below_target"]
    assert not checks["vbnet_beats_every_baseline"]
    assert not checks["capacity_ratio_ac2_ac1"]
    assert checks["loss_slope_inverse_to_R"]


def test_case_b_checks():
    table = [
        {"method": "STL", "alpha": 0.02, "rmse": 0.07},
        {"method": "STL", "alpha": 1.0, "rmse": 0.001},
        {"method": "MTL(7+1)", "alpha": 0.02, "rmse": 0.0009},
        {"method": "MTL(7+1)", "alpha": 0.04, "rmse": 0.0005},
        {"method": "MTL(7+1)", "alpha": 0.06, "rmse": 0.0003},
        {"method": "MTL(7+1)", "alpha": 1.0, "rmse": 0.0002},
    ]
    checks = case_b_checks(table, 7)
    assert checks == {
        "stl_cold_start_gap": True,
        "full_data_same_order": True,
        "mtl_6pct_within_2x": True,
        "mtl_imbalance_dip": True,
    }


def test_case_b_rejects_bad_arguments():
    with pytest.raises(ConfigurationError):
        run_case_b(TINY, n_mature=5)
    with pytest.raises(ConfigurationError):
        run_case_b(TINY, alphas=[0.0])
    with pytest.raises(ConfigurationError):
        run_case_b(TINY, methods=["FT"])


@pytest.mark.slow
def test_case_a_small_run(tmp_path):
    report = run_case_a(TINY, tmp_path)
    assert report.case == "A"
    assert [u.name for u in report.units] == ["AC1", "AC2", "AC3", "AC4"]
    for unit in report.units:
        assert set(unit.rmse) == set(METHODS)
        assert all(0 <= v < 1 and math.isfinite(v) for v in unit.rmse.values())
        assert TINY.c_min < unit.C_f_hat < TINY.c_max
        assert unit.slope_oracle == pytest.approx(1 / [3.0, 3.5, 5.0, 6.0][unit.unit_id])
    for name in ("soc_tracking", "ploss_scatter", "capacity", "gamma", "params_timeseries"):
        assert (tmp_path / f"{name}.csv").exists()
    for kind in METHODS:
        assert (tmp_path / "checkpoints" / f"{kind}.msgpack").exists()
    tracking = pd.read_csv(tmp_path / "soc_tracking.csv")
    assert list(tracking.columns) == ["unit_id", "sample", "step", "s_true", *METHODS]
    assert load_report(tmp_path)["meta"]["seed"] == TINY.seed


@pytest.mark.slow
def test_reports_are_reproducible(tmp_path):
    run_case_a(TINY, tmp_path / "a")
    run_case_a(TINY, tmp_path / "b")
    first = (tmp_path / "a" / "report.json").read_bytes()
    assert first == (tmp_path / "b" / "report.json").read_bytes()


@pytest.mark.slow
def test_case_b_small_grid(tmp_path):
    report = run_case_b(TINY, n_mature=3, alphas=[0.25, 1.0], out_dir=tmp_path)
    assert {(row["method"], row["alpha"]) for row in report.table} == {
        ("STL", 0.25),
        ("STL", 1.0),
        ("MTL(3+1)", 0.25),
        ("MTL(3+1)", 1.0),
    }
    by_cell = {(row["method"], row["alpha"]): row for row in report.table}
    assert by_cell[("STL", 0.25)]["n_new_train"] == 2
    assert by_cell[("MTL(3+1)", 1.0)]["n_new_train"] == 8
    assert all(math.isfinite(row["rmse"]) for row in report.table)
    frame = pd.read_csv(tmp_path / "case_b_mature3.csv")
    assert len(frame) == 4


@pytest.mark.slow
def test_gradient_report_covers_primitives_and_model():
    errors = gradient_report(TINY, points=2, max_entries=3)
    assert "vbnet.composite_loss" in errors
    assert "primitive.conv1d" in errors
    assert max(errors.values()) < 1e-4
