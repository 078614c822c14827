import math

import numpy as np
import pytest

from vbnet.config.interface import AcUnitSpec
from vbnet.errors import DomainError, SimulationError
from vbnet.physics.battery import soc_from_temp
from vbnet.physics.thermal import (
    EnvSeries,
    check_trajectory,
    heat_gain_1r1c,
    mean_heat_gain_exact,
    normalized_price,
    price_responsive_power,
    read_trajectory_csv,
    simulate_unit,
    step_euler,
    step_exact,
    write_trajectory_csv,
)


def _env(T_out, price=None, start="2023-07-01"):
    T_out = np.asarray(T_out, dtype=float)
    price = np.full(len(T_out), 0.7) if price is None else np.asarray(price, dtype=float)
    t = np.datetime64(start, "h") + np.arange(len(T_out)).astype("timedelta64[h]")
    return EnvSeries(t=t, T_out=T_out, price=price)


@pytest.mark.parametrize(
    "T_out, T_in, R, expected",
    [(30, 24, 3.0, 2.0), (24, 24, 5.0, 0.0), (22, 24, 2.0, -1.0)],
)
def test_heat_gain(T_out, T_in, R, expected):
    assert heat_gain_1r1c(T_out, T_in, R) == pytest.approx(expected)


def test_step_exact_reference_value(fleet4):
    assert step_exact(24.0, 32.0, 12.0, fleet4[0], 3600.0) == pytest.approx(22.26, abs=0.01)


def test_step_exact_fixed_point_and_continuity(fleet4):
    ac1 = fleet4[0]
    assert step_exact(28.0, 28.0, 0.0, ac1, 3600.0) == pytest.approx(28.0, abs=1e-12)
    assert step_exact(24.0, 32.0, 12.0, ac1, 1e-9) == pytest.approx(24.0, abs=1e-9)


def test_step_euler_reference_value(fleet4):
    assert step_euler(24.0, 32.0, 12.0, fleet4[0], 3600.0) == pytest.approx(22.205, abs=1e-3)


def test_step_euler_equilibrium(fleet4):
    ac1 = fleet4[0]
    P = (32.0 - 24.0) / ac1.R / ac1.eta
    assert step_euler(24.0, 32.0, P, ac1, 3600.0) == pytest.approx(24.0, abs=1e-12)


def test_step_rejects_non_positive_dt(fleet4):
    with pytest.raises(DomainError):
        step_exact(24.0, 32.0, 0.0, fleet4[0], 0.0)
    with pytest.raises(DomainError):
        step_euler(24.0, 32.0, 0.0, fleet4[0], -1.0)


def test_euler_converges_first_order(fleet4):
    ac1 = fleet4[0]
    exact = step_exact(24.0, 32.0, 12.0, ac1, 3600.0)

    def euler(n):
        T = 24.0
        for _ in range(n):
            T = step_euler(T, 32.0, 12.0, ac1, 3600.0 / n)
        return T

    errors = [abs(euler(n) - exact) for n in (1, 2, 4, 8)]
    assert errors[1] < errors[0]
    for coarse, fine in zip(errors[:-1], errors[1:]):
        assert coarse / fine == pytest.approx(2.0, rel=0.15)


@pytest.mark.parametrize("T, T_out, P", [(24.0, 32.0, 12.0), (21.0, 26.0, 0.0), (23.0, 30.0, 4.0)])
def test_energy_balance(fleet4, T, T_out, P):
    ac1 = fleet4[0]
    dt = 3600.0
    T_next = step_exact(T, T_out, P, ac1, dt)
    stored = ac1.C_th * (T_next - T)
    supplied = dt * (mean_heat_gain_exact(T, T_out, P, ac1, dt) - ac1.eta * P) * 1e3
    assert stored == pytest.approx(supplied, rel=1e-6)


def test_halving_thermal_mass_doubles_hourly_change():
    light = AcUnitSpec(id=0, R=3.0, C_th=1.8e7)
    heavy = AcUnitSpec(id=0, R=3.0, C_th=3.6e7)
    d_light = step_euler(24.0, 32.0, 5.0, light, 3600.0) - 24.0
    d_heavy = step_euler(24.0, 32.0, 5.0, heavy, 3600.0) - 24.0
    assert d_heavy == pytest.approx(d_light / 2, rel=1e-12)


def test_normalized_price():
    assert normalized_price(np.full(30, 0.7), 29) == 0.5
    price = np.array([0.3, 1.1, 0.7])
    assert normalized_price(price, 2) == pytest.approx(0.5)
    assert normalized_price(price, 1) == pytest.approx(1.0)


def test_price_responsive_power(fleet4):
    ac1 = fleet4[0]
    env = _env([34.0] * 3)
    # flat price puts the setpoint at the band midpoint
    assert price_responsive_power(env, ac1, 22.5) == pytest.approx(11.5 / (0.97 * 3.0), rel=1e-9)
    assert price_responsive_power(env, ac1, 22.5) == pytest.approx(3.95, abs=0.01)

    idle = _env([22.5] * 3)
    assert price_responsive_power(idle, ac1, 22.5) == 0.0


def test_power_stays_within_rating(fleet4):
    ac1 = fleet4[0]
    env = _env([34.0] * 3)
    assert price_responsive_power(env, ac1, 40.0) == ac1.P_max
    assert price_responsive_power(env, ac1, 0.0) == 0.0


def test_fixed_point_simulation(fleet4):
    ac1 = fleet4[0]
    traj = simulate_unit(ac1, _env([22.5] * 48), 22.5)
    np.testing.assert_allclose(traj.T_in, 22.5, atol=1e-12)
    np.testing.assert_allclose(traj.soc, 0.5, atol=1e-12)
    np.testing.assert_allclose(traj.P_ac, 0.0, atol=1e-12)


def test_diurnal_simulation_respects_invariants(fleet4):
    ac1 = fleet4[0]
    hours = np.arange(24 * 7)
    T_out = 30.0 + 4.0 * np.cos(2 * math.pi * (hours - 15) / 24)
    price = np.where((hours % 24 >= 10) & (hours % 24 < 19), 1.1, 0.3)
    traj = simulate_unit(ac1, _env(T_out, price), 22.5)
    check_trajectory(ac1, traj)
    assert np.all((traj.soc >= 0) & (traj.soc <= 1))
    np.testing.assert_array_equal(traj.soc, soc_from_temp(traj.T_in, ac1.T_min, ac1.T_max))


def test_simulation_is_deterministic(fleet4):
    env = _env(30.0 + np.sin(np.arange(72) / 5.0))
    a = simulate_unit(fleet4[1], env, 23.0)
    b = simulate_unit(fleet4[1], env, 23.0)
    np.testing.assert_array_equal(a.T_in, b.T_in)
    np.testing.assert_array_equal(a.P_ac, b.P_ac)


def test_simulation_rejects_bad_inputs(fleet4):
    env = _env([30.0] * 5)
    with pytest.raises(DomainError):
        simulate_unit(fleet4[0], env, 30.0)
    with pytest.raises(DomainError):
        simulate_unit(fleet4[0], env, 22.0, integrator="rk4")


def test_non_finite_state_reports_step(fleet4):
    env = _env([30.0, 30.0, float("nan"), 30.0])
    with pytest.raises(SimulationError) as e:
        simulate_unit(fleet4[0], env, 22.0)
    assert e.value.step == 3


def test_check_trajectory_flags_first_bad_step(euler_trajectory, fleet4):
    traj = euler_trajectory
    traj_bad = type(traj)(
        unit_id=traj.unit_id, env=traj.env, T_in=traj.T_in, P_ac=traj.P_ac.copy(), soc=traj.soc
    )
    traj_bad.P_ac[5] = -1.0
    with pytest.raises(SimulationError) as e:
        check_trajectory(fleet4[0], traj_bad)
    assert e.value.step == 5


def test_env_series_invariants():
    t = np.datetime64("2023-07-01T00", "h") + np.array([0, 1, 3]).astype("timedelta64[h]")
    with pytest.raises(DomainError):
        EnvSeries(t=t, T_out=[1.0, 2.0, 3.0], price=[1.0, 1.0, 1.0])
    with pytest.raises(DomainError):
        _env([1.0, 2.0], price=[1.0])


def test_trajectory_csv_round_trip(tmp_path, euler_trajectory):
    path = tmp_path / "unit_0.csv"
    write_trajectory_csv(euler_trajectory, path)
    header = path.read_text().splitlines()[0]
    assert header == "timestamp,T_out,price,T_in,P_ac,soc"
    back = read_trajectory_csv(path, 0)
    np.testing.assert_array_equal(back.env.t, euler_trajectory.env.t)
    np.testing.assert_array_equal(back.T_in, euler_trajectory.T_in)
    np.testing.assert_array_equal(back.soc, euler_trajectory.soc)
