"""Fixed-step numerical kernel shared by the plant models.

The scalar kernels here are compiled with numba so that the simulation loop
(which calls them tens of thousands of times per run) stays fast. Each kernel
is a pure function of floats; the dataclass wrappers below are the public,
validated face of the same math.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, replace

from numba import njit


class Scheme(enum.IntEnum):
    RK4 = 0
    EULER = 1

    @classmethod
    def parse(cls, name: "str | Scheme") -> "Scheme":
        if isinstance(name, Scheme):
            return name
        key = str(name).strip().lower()
        aliases = {"rk4": cls.RK4, "runge-kutta": cls.RK4, "euler": cls.EULER}
        if key not in aliases:
            raise ValueError(f"unknown integration scheme {name!r} (expected 'rk4' or 'euler')")
        return aliases[key]


RK4 = int(Scheme.RK4)
EULER = int(Scheme.EULER)


# --------------------------------------------------------------------------
# compiled kernels
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def affine_advance(x, a, b, dt, scheme):
    """One step of dx/dt = a + b*x with ``a`` and ``b`` held over the step."""
    k1 = a + b * x
    if scheme == 1:
        return x + dt * k1
    k2 = a + b * (x + 0.5 * dt * k1)
    k3 = a + b * (x + 0.5 * dt * k2)
    k4 = a + b * (x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True, nogil=True)
def lag_advance(x, u, gain, time_constant, dt, scheme):
    """Advance a K/(1+sT) block with input ``u`` held for one step."""
    return affine_advance(x, gain * u / time_constant, -1.0 / time_constant, dt, scheme)


@njit(cache=True, nogil=True)
def cascade_advance(x1, x2, u, k1, t1, k2, t2, dt, scheme):
    """Advance two lags in series (u -> x1 -> x2) as one coupled system."""
    d11 = (k1 * u - x1) / t1
    d12 = (k2 * x1 - x2) / t2
    if scheme == 1:
        return x1 + dt * d11, x2 + dt * d12
    a1 = x1 + 0.5 * dt * d11
    a2 = x2 + 0.5 * dt * d12
    d21 = (k1 * u - a1) / t1
    d22 = (k2 * a1 - a2) / t2
    b1 = x1 + 0.5 * dt * d21
    b2 = x2 + 0.5 * dt * d22
    d31 = (k1 * u - b1) / t1
    d32 = (k2 * b1 - b2) / t2
    c1 = x1 + dt * d31
    c2 = x2 + dt * d32
    d41 = (k1 * u - c1) / t1
    d42 = (k2 * c1 - c2) / t2
    return (
        x1 + dt / 6.0 * (d11 + 2.0 * d21 + 2.0 * d31 + d41),
        x2 + dt / 6.0 * (d12 + 2.0 * d22 + 2.0 * d32 + d42),
    )


@njit(cache=True, nogil=True)
def integrator_step(state, u_prev, u, dt):
    """Trapezoidal accumulation of ``u`` over one step of length ``dt``."""
    return state + 0.5 * dt * (u_prev + u)


@njit(cache=True, nogil=True)
def rate_limit(previous, candidate, max_rate, dt):
    """Move from ``previous`` toward ``candidate`` by at most ``max_rate*dt``."""
    step = max_rate * dt
    if candidate > previous + step:
        return previous + step
    if candidate < previous - step:
        return previous - step
    return candidate


@njit(cache=True, nogil=True)
def saturate(value, lo, hi):
    if lo > hi:
        raise ValueError("saturate: lower limit exceeds upper limit")
    if value < lo:
        return lo
    if value > hi:
        return hi
    return value


# --------------------------------------------------------------------------
# public value types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LagBlock:
    """First-order lag K/(1+sT) with its current output ``state``."""

    gain: float
    time_constant: float
    state: float = 0.0

    def __post_init__(self):
        if not self.time_constant > 0.0:
            raise ValueError(f"time_constant must be > 0, got {self.time_constant!r}")


def lag_step(block: LagBlock, u: float, dt: float, scheme: Scheme = Scheme.RK4) -> LagBlock:
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    x = lag_advance(float(block.state), float(u), float(block.gain),
                    float(block.time_constant), float(dt), int(scheme))
    return replace(block, state=x)


@dataclass(frozen=True)
class SolverSettings:
    dt: float = 0.01
    t_end: float = 1800.0
    scheme: Scheme = Scheme.RK4
    decimation: int = 10

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if not self.dt > 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt!r}")
        if not self.t_end > self.dt:
            raise ValueError(f"t_end must exceed dt, got t_end={self.t_end!r}, dt={self.dt!r}")
        if int(self.decimation) != self.decimation or self.decimation < 1:
            raise ValueError(f"decimation must be a positive integer, got {self.decimation!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def check_stability(self, time_constants) -> bool:
        """Warn when dt exceeds a tenth of the fastest time constant."""
        fastest = min(time_constants)
        if self.dt > fastest / 10.0:
            warnings.warn(
                f"dt={self.dt} s exceeds min time constant / 10 = {fastest / 10.0} s",
                RuntimeWarning,
                stacklevel=2,
            )
            return False
        return True
