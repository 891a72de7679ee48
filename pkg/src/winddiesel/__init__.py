"""Frequency-control simulator for an isolated wind-diesel hybrid power system."""

from .diesel import DieselPlantParams, DieselPlantState, diesel_plant_step, pi_control
from .errors import ScenarioError, SimulationFault
from .grid import GridParams, GridState, frequency_step
from .pso import PsoResult, PsoSettings, ise, pso_optimize
from .runner import (
    SimulationResult,
    TimeSeries,
    evaluate_candidate,
    run_simulation,
    tune,
    write_timeseries_csv,
)
from .scenario import Scenario, builtin_scenario, dump_scenario, load_scenario, parse_scenario
from .sim_core import LagBlock, Scheme, SolverSettings, integrator_step, lag_step, rate_limit, saturate
from .wind import (
    WindPlantParams,
    WindPlantState,
    droop_power,
    max_wind_power,
    power_coefficient,
    reserve_power,
    tip_speed_ratio,
    wind_droop_gain,
    wind_plant_step,
)

__version__ = "0.1.0"
