"""Diesel generator plant: PI secondary control, governor droop, lags and limits.

Frequency enters the controller in per unit of nominal frequency, the
controller output and droop term are per unit of the system power base, and
``droop`` is the per-unit frequency change for a 1 p.u. power change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from numba import njit

from .sim_core import Scheme, cascade_advance, integrator_step, rate_limit, saturate


@dataclass(frozen=True)
class DieselPlantParams:
    k_dg: float = 1.0
    t_dg: float = 2.0  # s
    k_dt: float = 1.0
    t_dt: float = 20.0  # s
    droop: float = 0.2273  # p.u./p.u.
    kp: float = 2.231
    ki: float = 0.0651  # 1/s
    grc_rate: float = 1200.0  # W/s
    rated_power: float = 40e3  # W
    setpoint: float = 0.0  # W, dispatch at zero control action
    base_power: float = 350e3  # W
    nominal_frequency: float = 50.0  # Hz

    def __post_init__(self):
        for name in ("t_dg", "t_dt", "droop", "rated_power", "base_power", "nominal_frequency"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be > 0, got {value!r}")
        for name in ("kp", "ki", "grc_rate"):
            value = getattr(self, name)
            if not value >= 0.0:
                raise ValueError(f"{name} must be >= 0, got {value!r}")
        if not 0.0 <= self.setpoint <= self.rated_power:
            raise ValueError(f"setpoint {self.setpoint!r} W outside [0, {self.rated_power!r}] W")

    def with_gains(self, kp: float, ki: float, droop: float) -> "DieselPlantParams":
        return replace(self, kp=float(kp), ki=float(ki), droop=float(droop))


@dataclass(frozen=True)
class DieselPlantState:
    pi_integral: float = 0.0  # p.u. frequency * s
    last_error: float = 0.0  # p.u. frequency, for the trapezoid
    governor: float = 0.0  # W
    turbine: float = 0.0  # W
    p_diesel: float = 0.0  # W
    u_pi: float = 0.0  # p.u.

    @classmethod
    def steady(cls, power: float) -> "DieselPlantState":
        return cls(governor=power, turbine=power, p_diesel=power)


@njit(cache=True, nogil=True)
def pi_kernel(error, last_error, integral, kp, ki, dt):
    integral = integrator_step(integral, last_error, error, dt)
    return 0.0 - (kp * error + ki * integral), integral


@njit(cache=True, nogil=True)
def diesel_advance(integral, last_error, gov, turb, p_out, delta_f, kp, ki, droop, setpoint,
                   base, f_nom, k_dg, t_dg, k_dt, t_dt, grc, rated, dt, scheme):
    """Returns (integral, error, governor, turbine, p_diesel, u_pi)."""
    error = delta_f / f_nom
    # conditional integration: hold the integral while saturated and the error
    # would drive further into the limit
    if (p_out >= rated and error < 0.0) or (p_out <= 0.0 and error > 0.0):
        u = 0.0 - (kp * error + ki * integral)
    else:
        u, integral = pi_kernel(error, last_error, integral, kp, ki, dt)
    demand = setpoint + base * (u - error / droop)
    gov, turb = cascade_advance(gov, turb, demand, k_dg, t_dg, k_dt, t_dt, dt, scheme)
    p = saturate(rate_limit(p_out, turb, grc, dt), 0.0, rated)
    return integral, error, gov, turb, p, u


def pi_control(error: float, integral: float, kp: float, ki: float, dt: float,
               last_error: float | None = None) -> tuple[float, float]:
    """PI law u = -(kp*e + ki*int e dt), so a negative error raises the output.

    The integral is advanced trapezoidally from ``last_error`` (defaults to
    ``error``, i.e. the input held over the step). Returns ``(u, new_integral)``.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    prev = error if last_error is None else last_error
    u, new_integral = pi_kernel(float(error), float(prev), float(integral), float(kp),
                                float(ki), float(dt))
    return float(u), float(new_integral)


def diesel_plant_step(state: DieselPlantState, params: DieselPlantParams, delta_f: float,
                      dt: float, scheme: Scheme = Scheme.RK4) -> DieselPlantState:
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    p = params
    integral, error, gov, turb, p_out, u = diesel_advance(
        state.pi_integral, state.last_error, state.governor, state.turbine, state.p_diesel,
        float(delta_f), p.kp, p.ki, p.droop, p.setpoint, p.base_power, p.nominal_frequency,
        p.k_dg, p.t_dg, p.k_dt, p.t_dt, p.grc_rate, p.rated_power, float(dt), int(scheme))
    return DieselPlantState(pi_integral=integral, last_error=error, governor=gov,
                            turbine=turb, p_diesel=p_out, u_pi=u)
