import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from winddiesel.errors import SimulationFault
from winddiesel.wind import (
    DEFAULT_CP_COEFFICIENTS,
    WindPlantParams,
    available_power,
    check_operating_point,
    droop_power,
    initial_wind_state,
    max_wind_power,
    power_coefficient,
    reserve_power,
    tip_speed_ratio,
    wind_droop_gain,
    wind_plant_step,
)


def brute_force_cp(lam, beta, alpha):
    total = 0.0
    for i in range(5):
        for j in range(5):
            total += alpha[i][j] * beta**i * lam**j
    return total


def hold(state, params, seconds, dt=0.01, **inputs):
    for _ in range(int(round(seconds / dt))):
        state = wind_plant_step(state, params, dt=dt, **inputs)
    return state


class TestMaxWindPower:
    def test_zero_wind(self):
        assert max_wind_power(0.0, 1.25, 100.0, 0.4) == 0.0

    def test_reference_value(self):
        area = math.pi * 45.0**2
        # 0.5 * 0.4 * 1.25 * 6361.725 * 512, by calculator
        assert max_wind_power(8.0, 1.25, area, 0.4) == pytest.approx(814_300.8, abs=1.0)

    def test_cubic_law(self):
        p1 = max_wind_power(5.0, 1.2, 50.0, 0.3)
        assert max_wind_power(10.0, 1.2, 50.0, 0.3) == pytest.approx(8 * p1, rel=1e-15)

    def test_negative_wind_rejected(self):
        with pytest.raises(ValueError):
            max_wind_power(-1.0, 1.25, 10.0, 0.4)

    @settings(max_examples=100, deadline=None)
    @given(v=st.floats(0, 30), dv=st.floats(0, 5), cp=st.floats(0, 0.59))
    def test_monotone_in_wind(self, v, dv, cp):
        assert max_wind_power(v + dv, 1.25, 100.0, cp) >= max_wind_power(v, 1.25, 100.0, cp)


class TestPowerCoefficient:
    def test_all_zero(self):
        assert power_coefficient(7.0, 2.0, np.zeros((5, 5))) == 0.0

    def test_constant_term(self):
        a = np.zeros((5, 5))
        a[0, 0] = 0.45
        assert power_coefficient(3.3, 12.0, a) == 0.45

    def test_lambda_squared(self):
        a = np.zeros((5, 5))
        a[0, 2] = 1.0
        assert power_coefficient(3.0, 7.0, a) == 9.0

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            power_coefficient(1.0, 0.0, np.zeros((4, 5)))

    @settings(max_examples=100, deadline=None)
    @given(lam=st.floats(0, 15), beta=st.floats(0, 10),
           alpha=st.lists(st.lists(st.floats(-1, 1), min_size=5, max_size=5), min_size=5, max_size=5))
    def test_matches_brute_force(self, lam, beta, alpha):
        expected = brute_force_cp(lam, beta, alpha)
        scale = sum(abs(alpha[i][j]) * beta**i * lam**j for i in range(5) for j in range(5))
        assert abs(power_coefficient(lam, beta, alpha) - expected) <= 1e-12 * max(scale, 1e-300)

    def test_default_fit_peak(self):
        # the exponential reference curve peaks near 0.48 at lambda ~ 8.1
        cp = power_coefficient(8.1, 0.0, DEFAULT_CP_COEFFICIENTS)
        assert 0.47 < cp < 0.49
        assert check_operating_point(WindPlantParams()) == pytest.approx(cp)

    def test_betz_warning(self):
        a = np.zeros((5, 5))
        a[0, 0] = 0.7
        with pytest.warns(RuntimeWarning):
            check_operating_point(WindPlantParams(cp_coefficients=a))


class TestTipSpeedRatio:
    def test_direct(self):
        assert tip_speed_ratio(2.0, 45.0, 9.0) == pytest.approx(10.0)

    def test_zero_speed(self):
        assert tip_speed_ratio(0.0, 45.0, 9.0) == 0.0

    def test_gear_chain(self):
        assert tip_speed_ratio(140.0, 45.0, 10.0, gear_ratio=70.0) == pytest.approx(9.0)

    def test_zero_wind_undefined(self):
        with pytest.raises(ValueError):
            tip_speed_ratio(1.0, 45.0, 0.0)


class TestReserveAndDroop:
    def test_reserve_values(self):
        assert reserve_power(310e3, 275e3) == 35e3
        assert reserve_power(310e3, 276e3) == 34e3
        assert reserve_power(310e3, 310e3) == 0.0

    def test_over_dispatch(self):
        with pytest.raises(ValueError):
            reserve_power(310e3, 311e3)

    def test_droop_gain(self):
        assert wind_droop_gain(35e3, 0.5) == pytest.approx(70e3)
        assert wind_droop_gain(0.0, 0.5) == 0.0
        assert wind_droop_gain(34e3, 1.0) == pytest.approx(34e3)
        with pytest.raises(ValueError):
            wind_droop_gain(1.0, 0.0)

    def test_droop_power(self):
        assert droop_power(0.0, 70e3) == 0.0
        assert droop_power(-0.1, 70e3) == pytest.approx(7e3)
        assert droop_power(0.1, 70e3) == pytest.approx(-7e3)

    @settings(max_examples=100, deadline=None)
    @given(x=st.floats(-50, 50), g=st.floats(0, 1e6))
    def test_droop_is_odd(self, x, g):
        assert droop_power(-x, g) == -droop_power(x, g)


class TestWindPlantStep:
    def test_dispatch_steady_state(self):
        p = WindPlantParams()
        s = initial_wind_state(p, 8.0, 0.0)
        s = hold(s, p, 100.0, vw=8.0, delta_f=0.0, rocof=0.0, p_cmd=275e3)
        assert s.p_grid == pytest.approx(275e3, abs=100.0)
        assert s.p_reserve == pytest.approx(35e3, abs=100.0)
        assert s.p_max == 310e3

    def test_zero_command(self):
        p = WindPlantParams()
        s = hold(initial_wind_state(p, 8.0, 100e3), p, 150.0, vw=8.0, delta_f=0.0, rocof=0.0,
                 p_cmd=0.0)
        assert s.p_grid == pytest.approx(0.0, abs=50.0)

    def test_droop_increment(self):
        p = WindPlantParams()  # 310 kW available, 0.5 Hz band -> 70 kW/Hz at 275 kW
        s = hold(initial_wind_state(p, 8.0, 275e3), p, 200.0, vw=8.0, delta_f=-0.2, rocof=0.0,
                 p_cmd=275e3)
        assert s.p_grid == pytest.approx(289e3, abs=1.0)

    def test_inertial_term(self):
        p = WindPlantParams(inertial_gain=10e3)
        s = hold(initial_wind_state(p, 8.0, 275e3), p, 200.0, vw=8.0, delta_f=0.0, rocof=-0.5,
                 p_cmd=275e3)
        assert s.p_grid == pytest.approx(280e3, abs=1.0)

    def test_torque_recorded(self):
        p = WindPlantParams()
        s = wind_plant_step(initial_wind_state(p, 8.0, 275e3), p, 8.0, 0.0, 0.0, 275e3, 0.01)
        omega = p.tip_speed_ratio * 8.0 / p.blade_radius
        assert s.rotor_speed == pytest.approx(omega)
        assert s.torque_cmd == pytest.approx(s.p_grid / omega)

    def test_zero_rotor_speed_fault(self):
        p = WindPlantParams(tip_speed_ratio=0.0)  # Cp(0) = alpha00 > 0 but omega = 0
        s = initial_wind_state(WindPlantParams(), 8.0, 100e3)
        with pytest.raises(SimulationFault):
            wind_plant_step(s, p, 8.0, 0.0, 0.0, 100e3, 0.01)

    def test_unity_dc_gain(self):
        p = WindPlantParams()
        s = hold(initial_wind_state(p, 8.0, 200e3), p, 300.0, vw=8.0, delta_f=0.0, rocof=0.0,
                 p_cmd=250e3)
        assert s.p_grid == pytest.approx(250e3, rel=1e-6)

    @settings(max_examples=100, deadline=None)
    @given(cmds=st.lists(st.floats(0, 310e3), min_size=1, max_size=5),
           dfs=st.lists(st.floats(-2, 2), min_size=1, max_size=5),
           vw=st.floats(3.0, 12.0))
    def test_power_bounds_and_identity(self, cmds, dfs, vw):
        p = WindPlantParams()
        avail = available_power(p, vw)
        s = initial_wind_state(p, vw, min(cmds[0], avail))
        for cmd, df in zip(cmds, dfs):
            for _ in range(200):
                s = wind_plant_step(s, p, vw, df, 0.0, min(cmd, avail), 0.05)
                assert 0.0 <= s.p_grid <= min(s.p_max, p.rated_power)
                assert s.p_reserve + s.p_grid == pytest.approx(s.p_max, rel=1e-15, abs=1e-9)
                assert s.p_reserve >= 0.0

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            WindPlantParams(freq_band=0.0)
        with pytest.raises(ValueError):
            WindPlantParams(cp_coefficients=np.zeros((3, 3)))
