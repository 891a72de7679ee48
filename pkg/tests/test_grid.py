import dataclasses

import numpy as np
import pytest

from winddiesel.errors import SimulationFault
from winddiesel.grid import GridParams, GridState, frequency_step
from winddiesel.runner import run_simulation
from winddiesel.scenario import ControllerSection, LoadSection, DispatchSection, Scenario, SolverSection


def step_scenario(delta_kw, t_end=30.0, t_step=10.0, gains=None, dispatch_follows=False):
    load = ((0.0, 295.0), (t_step, 295.0 + delta_kw))
    sc = Scenario(load=LoadSection(steps=load),
                  dispatch=DispatchSection(wind_setpoint=((0.0, 275.0),)),
                  solver=SolverSection(t_end=t_end, decimation=1, steady_window=1.0))
    if gains is not None:
        sc = sc.with_gains(gains)
    return sc.validate()


class TestFrequencyStep:
    def test_equilibrium(self):
        s = GridState()
        for _ in range(1000):
            s = frequency_step(s, 275e3, 20e3, 295e3, GridParams(), 0.01)
        assert s.delta_f == 0.0 and s.rocof == 0.0

    def test_damping_pu(self):
        assert GridParams().damping_pu == pytest.approx(0.012 * 50 / 0.35)
        assert GridParams().damping_pu == pytest.approx(1.7143, abs=1e-4)

    def test_deficit_slows_frequency(self):
        s = frequency_step(GridState(), 275e3, 20e3, 306e3, GridParams(), 0.01)
        assert s.delta_f < 0.0 and s.rocof < 0.0

    def test_initial_rocof(self):
        # 2H S/f0 * dfdt = dP at df = 0: 11 kW / (10 * 350 kW / 50 Hz)
        g = GridParams()
        s = frequency_step(GridState(), 0.0, 0.0, 11e3, g, 1e-6)
        assert s.rocof == pytest.approx(-11e3 / 70e3, rel=1e-4)

    def test_steady_state_without_generation_response(self):
        g = GridParams()
        s = GridState()
        for _ in range(20000):
            s = frequency_step(s, 0.0, 0.0, 11e3, g, 0.01)
        assert s.delta_f == pytest.approx(-11e3 / 12e3, rel=1e-6)

    def test_fault_on_runaway(self):
        g = GridParams(damping=0.0)
        with pytest.raises(SimulationFault):
            frequency_step(GridState(delta_f=49.9), 0.0, 0.0, 1e9, g, 1.0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            GridParams(inertia=0.0)
        with pytest.raises(ValueError):
            GridParams(damping=-1.0)


class TestStepSign:
    def test_load_increase(self):
        r = run_simulation(step_scenario(11.0))
        first = (r.series.t > 10.0) & (r.series.t <= 11.0)
        assert r.series.delta_f[first].min() < 0.0

    def test_load_decrease(self):
        r = run_simulation(step_scenario(-11.0))
        first = (r.series.t > 10.0) & (r.series.t <= 11.0)
        assert r.series.delta_f[first].max() > 0.0

    def test_no_step(self):
        r = run_simulation(step_scenario(0.0))
        assert np.all(r.series.delta_f == 0.0)


class TestDroopSteadyState:
    def test_closed_form(self):
        # Kp = Ki = 0: sum of droop stiffnesses sets the static deviation
        droop = 0.2273
        sc = step_scenario(11.0, t_end=1500.0, gains=(0.0, 0.0, droop))
        r = run_simulation(sc)
        g = sc.grid_params()
        wind_gain_pu = (310e3 - 275e3) / 0.5 * g.nominal_frequency / g.base_power
        dp_pu = 11e3 / g.base_power
        expected_hz = -dp_pu / (g.damping_pu + 1.0 / droop + wind_gain_pu) * g.nominal_frequency
        assert r.series.delta_f[-1] == pytest.approx(expected_hz, rel=1e-3)

    def test_linearity(self):
        a = run_simulation(step_scenario(5.0, t_end=200.0, gains=(0.0, 0.0, 0.3)))
        b = run_simulation(step_scenario(10.0, t_end=200.0, gains=(0.0, 0.0, 0.3)))
        scale = np.abs(b.series.delta_f).max()
        assert np.abs(b.series.delta_f - 2 * a.series.delta_f).max() <= 1e-9 * scale
