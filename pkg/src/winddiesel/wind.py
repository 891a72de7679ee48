"""DFIG wind plant: available power, Cp polynomial and de-loaded droop support.

The plant is dispatched below its available power. The headroom (reserve) sets
a droop gain over a fixed frequency band, and the droop increment is added to
the set point before it passes through the two wind-path lags.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .errors import SimulationFault
from .sim_core import Scheme, cascade_advance, saturate

BETZ_LIMIT = 16.0 / 27.0

# Least-squares quartic in tip speed ratio (beta = 0) fitted to the exponential
# approximation Cp = 0.5176 (116/li - 5) exp(-21/li) + 0.0068 lambda over
# lambda in [2, 13]. Max abs residual 0.0156, rms 0.0048. Rows index pitch
# powers, columns index lambda powers; pitch rows are zero.
DEFAULT_CP_COEFFICIENTS = (
    (0.29203029, -0.31183863, 0.10595884, -0.01055564, 0.00031932),
    (0.0, 0.0, 0.0, 0.0, 0.0),
    (0.0, 0.0, 0.0, 0.0, 0.0),
    (0.0, 0.0, 0.0, 0.0, 0.0),
    (0.0, 0.0, 0.0, 0.0, 0.0),
)

# Tip speed ratio at which the exponential reference curve peaks.
DEFAULT_TIP_SPEED_RATIO = 8.1


@dataclass(frozen=True)
class WindPlantParams:
    air_density: float = 1.25  # kg/m^3
    blade_radius: float = 45.0  # m
    gear_ratio: float = 70.0
    cp_coefficients: tuple = DEFAULT_CP_COEFFICIENTS
    pitch_angle: float = 0.0  # deg, held fixed
    tip_speed_ratio: float = DEFAULT_TIP_SPEED_RATIO
    rated_power: float = 310e3  # W
    lag_ti: float = 3.0  # s
    lag_tpt: float = 10.0  # s
    freq_band: float = 0.5  # Hz
    inertial_gain: float = 0.0  # W per Hz/s

    def __post_init__(self):
        for name in ("air_density", "blade_radius", "gear_ratio", "rated_power",
                     "lag_ti", "lag_tpt", "freq_band"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be > 0, got {value!r}")
        if not self.inertial_gain >= 0.0:
            raise ValueError(f"inertial_gain must be >= 0, got {self.inertial_gain!r}")
        if not self.tip_speed_ratio >= 0.0:
            raise ValueError(f"tip_speed_ratio must be >= 0, got {self.tip_speed_ratio!r}")
        alpha = np.asarray(self.cp_coefficients, dtype=float)
        if alpha.shape != (5, 5) or not np.all(np.isfinite(alpha)):
            raise ValueError("cp_coefficients must be a finite 5x5 matrix")
        object.__setattr__(self, "cp_coefficients", tuple(tuple(float(v) for v in row) for row in alpha))

    @property
    def swept_area(self) -> float:
        return math.pi * self.blade_radius**2

    @property
    def alpha(self) -> np.ndarray:
        return np.asarray(self.cp_coefficients, dtype=float)


@dataclass(frozen=True)
class WindPlantState:
    lag_i: float  # W, output of the T_i block
    lag_pt: float  # W, output of the T_pt block
    p_grid: float  # W
    p_reserve: float  # W
    p_max: float = 0.0  # W, available power used on the last step
    rotor_speed: float = 0.0  # rad/s, turbine side
    torque_cmd: float = 0.0  # N*m, recorded only
    p_ref: float = field(default=0.0)


# --------------------------------------------------------------------------
# compiled kernels
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _cp(lam, beta, alpha):
    total = 0.0
    bi = 1.0
    for i in range(5):
        row = 0.0
        for j in range(4, -1, -1):
            row = row * lam + alpha[i, j]
        total += row * bi
        bi *= beta
    return total


@njit(cache=True, nogil=True)
def available_power_kernel(vw, rho, area, radius, lam, beta, alpha, rated):
    """Return (available power W, rotor speed rad/s) at wind speed ``vw``."""
    cp = _cp(lam, beta, alpha)
    p_aero = 0.5 * cp * rho * area * vw * vw * vw
    if p_aero < 0.0:
        p_aero = 0.0
    omega = lam * vw / radius
    return min(p_aero, rated), omega


@njit(cache=True, nogil=True)
def wind_advance(x1, x2, p_avail, pcmd, delta_f, rocof, freq_band, k_in, t_i, t_pt, dt, scheme):
    """One step of the set-point -> droop -> lag chain.

    Returns (lag_i, lag_pt, p_ref, p_grid).
    """
    reserve = p_avail - pcmd
    if reserve < 0.0:
        reserve = 0.0
    gain = reserve / freq_band
    p_ref = pcmd - delta_f * gain - k_in * rocof
    p_ref = saturate(p_ref, 0.0, p_avail)
    x1, x2 = cascade_advance(x1, x2, p_ref, 1.0, t_i, 1.0, t_pt, dt, scheme)
    return x1, x2, p_ref, saturate(x2, 0.0, p_avail)


# --------------------------------------------------------------------------
# public operations
# --------------------------------------------------------------------------


def max_wind_power(vw: float, rho: float, area: float, cp: float) -> float:
    """Aerodynamic power 0.5*Cp*rho*A*Vw^3 in watts."""
    if vw < 0.0:
        raise ValueError(f"wind speed must be >= 0, got {vw!r}")
    if not rho > 0.0 or not area > 0.0:
        raise ValueError("air density and swept area must be > 0")
    if not 0.0 <= cp <= 1.0:
        raise ValueError(f"power coefficient must lie in [0, 1], got {cp!r}")
    return 0.5 * cp * rho * area * vw**3


def power_coefficient(lam: float, beta: float, alpha) -> float:
    """Evaluate sum_i sum_j alpha[i][j] * beta**i * lam**j for i, j in 0..4."""
    a = np.asarray(alpha, dtype=float)
    if a.shape != (5, 5):
        raise ValueError(f"alpha must be 5x5, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("alpha must be finite")
    return float(_cp(float(lam), float(beta), a))


def tip_speed_ratio(omega: float, radius: float, vw: float, gear_ratio: float = 1.0) -> float:
    """Blade-tip speed over wind speed.

    ``omega`` is taken on the generator side when ``gear_ratio`` is given, and
    divided down to turbine speed first.
    """
    if vw <= 0.0:
        raise ValueError("tip speed ratio is undefined for zero wind speed")
    return (omega / gear_ratio) * radius / vw


def reserve_power(p_max: float, p_grid: float) -> float:
    if p_grid < 0.0:
        raise ValueError(f"p_grid must be >= 0, got {p_grid!r}")
    if p_grid > p_max:
        raise ValueError(f"over-dispatch: p_grid={p_grid!r} exceeds available {p_max!r}")
    return p_max - p_grid


def wind_droop_gain(reserve: float, freq_band: float) -> float:
    if not freq_band > 0.0:
        raise ValueError(f"frequency band must be > 0, got {freq_band!r}")
    if reserve < 0.0:
        raise ValueError(f"reserve must be >= 0, got {reserve!r}")
    return reserve / freq_band


def droop_power(delta_f: float, gain: float) -> float:
    return -delta_f * gain


def available_power(params: WindPlantParams, vw: float) -> float:
    """Available output: aerodynamic maximum capped at the plant rating."""
    if vw < 0.0:
        raise ValueError(f"wind speed must be >= 0, got {vw!r}")
    p, _ = available_power_kernel(float(vw), params.air_density, params.swept_area,
                                  params.blade_radius, params.tip_speed_ratio,
                                  params.pitch_angle, params.alpha, params.rated_power)
    return float(p)


def check_operating_point(params: WindPlantParams) -> float:
    """Cp at the configured operating point; warns outside (0, Betz]."""
    cp = power_coefficient(params.tip_speed_ratio, params.pitch_angle, params.alpha)
    if not 0.0 < cp <= BETZ_LIMIT:
        warnings.warn(f"Cp={cp:.4f} at the operating point lies outside (0, {BETZ_LIMIT:.3f}]",
                      RuntimeWarning, stacklevel=2)
    return cp


def initial_wind_state(params: WindPlantParams, vw: float, p_cmd: float) -> WindPlantState:
    """Steady state with both lags settled at the set point."""
    p_avail = available_power(params, vw)
    reserve = reserve_power(p_avail, p_cmd)
    omega = params.tip_speed_ratio * vw / params.blade_radius
    torque = p_cmd / omega if omega > 0.0 else 0.0
    return WindPlantState(lag_i=p_cmd, lag_pt=p_cmd, p_grid=p_cmd, p_reserve=reserve,
                          p_max=p_avail, rotor_speed=omega, torque_cmd=torque, p_ref=p_cmd)


def wind_plant_step(state: WindPlantState, params: WindPlantParams, vw: float, delta_f: float,
                    rocof: float, p_cmd: float, dt: float,
                    scheme: Scheme = Scheme.RK4) -> WindPlantState:
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    p_avail, omega = available_power_kernel(float(vw), params.air_density, params.swept_area,
                                            params.blade_radius, params.tip_speed_ratio,
                                            params.pitch_angle, params.alpha, params.rated_power)
    x1, x2, p_ref, p_grid = wind_advance(state.lag_i, state.lag_pt, p_avail, float(p_cmd),
                                         float(delta_f), float(rocof), params.freq_band,
                                         params.inertial_gain, params.lag_ti, params.lag_tpt,
                                         float(dt), int(scheme))
    if omega <= 0.0 and p_ref > 0.0:
        raise SimulationFault("torque command undefined: rotor speed is zero with nonzero power reference")
    torque = p_grid / omega if omega > 0.0 else 0.0
    return replace(state, lag_i=x1, lag_pt=x2, p_grid=p_grid, p_reserve=p_avail - p_grid,
                   p_max=p_avail, rotor_speed=omega, torque_cmd=torque, p_ref=p_ref)
