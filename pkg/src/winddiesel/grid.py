"""Frequency dynamics of the isolated system.

In per unit on ``base_power``:

    2H d(df_pu)/dt = dP_gen - dP_load - D_pu * df_pu

with D_pu = D * f_nom / S_base. Power deviations are taken from a balanced
operating point, so the mismatch is simply generation minus load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from numba import njit

from .errors import SimulationFault
from .sim_core import Scheme, affine_advance


@dataclass(frozen=True)
class GridParams:
    inertia: float = 5.0  # H, s
    damping: float = 12e3  # D, W/Hz (0.012 MW/Hz)
    nominal_frequency: float = 50.0  # Hz
    base_power: float = 350e3  # W

    def __post_init__(self):
        for name in ("inertia", "nominal_frequency", "base_power"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be > 0, got {value!r}")
        if not self.damping >= 0.0:
            raise ValueError(f"damping must be >= 0, got {self.damping!r}")

    @property
    def damping_pu(self) -> float:
        return self.damping * self.nominal_frequency / self.base_power

    @property
    def inertia_w_s_per_hz(self) -> float:
        """2H*S_base/f_nom: watts of accelerating power per Hz/s."""
        return 2.0 * self.inertia * self.base_power / self.nominal_frequency


@dataclass(frozen=True)
class GridState:
    delta_f: float = 0.0  # Hz
    rocof: float = 0.0  # Hz/s


@njit(cache=True, nogil=True)
def rocof_kernel(delta_f, mismatch, m, d):
    return (mismatch - d * delta_f) / m


@njit(cache=True, nogil=True)
def frequency_advance(delta_f, mismatch, m, d, dt, scheme):
    """Advance df with the power mismatch (W) held; m in W*s/Hz, d in W/Hz."""
    return affine_advance(delta_f, mismatch / m, -d / m, dt, scheme)


def frequency_step(state: GridState, p_wind: float, p_diesel: float, p_load: float,
                   params: GridParams, dt: float, scheme: Scheme = Scheme.RK4) -> GridState:
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    m = params.inertia_w_s_per_hz
    mismatch = float(p_wind) + float(p_diesel) - float(p_load)
    df = frequency_advance(state.delta_f, mismatch, m, params.damping, float(dt), int(scheme))
    if not math.isfinite(df) or abs(df) >= params.nominal_frequency:
        raise SimulationFault(f"frequency deviation left the valid range: {df!r} Hz")
    return GridState(delta_f=df, rocof=rocof_kernel(df, mismatch, m, params.damping))
