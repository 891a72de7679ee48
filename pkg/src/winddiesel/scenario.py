"""Scenario files: TOML in interface units (kW, s, Hz), validated on load.

Sections and their defaults mirror the documented hybrid-plant parameter
table; an empty file gives the reference experiment (295 kW, then 306 kW).
Section dataclasses keep the file units so that dump/load round-trips are
exact. Conversion to SI plant parameters happens in the ``*_params`` methods.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .diesel import DieselPlantParams
from .errors import ScenarioError
from .grid import GridParams
from .pso import PsoSettings
from .sim_core import Scheme, SolverSettings
from .wind import (
    DEFAULT_CP_COEFFICIENTS,
    DEFAULT_TIP_SPEED_RATIO,
    WindPlantParams,
    available_power,
    check_operating_point,
)

REFERENCE_GAINS_295 = (2.231, 0.0651, 0.2273)
REFERENCE_GAINS_306 = (2.0539, 0.0655, 0.4219)

BALANCE_TOLERANCE_W = 1.0


@dataclass(frozen=True)
class WindSection:
    air_density: float = 1.25
    blade_radius: float = 45.0
    gear_ratio: float = 70.0
    pitch_angle: float = 0.0
    tip_speed_ratio: float = DEFAULT_TIP_SPEED_RATIO
    rated_power_kw: float = 310.0
    lag_ti: float = 3.0
    lag_tpt: float = 10.0
    freq_band_hz: float = 0.5
    inertial_gain_kw_per_hz_s: float = 0.0
    cp_coefficients: tuple = DEFAULT_CP_COEFFICIENTS


@dataclass(frozen=True)
class WindSpeedSection:
    kind: str = "constant"  # constant | steps | sine
    value: float = 8.0
    steps: tuple = ()  # ((t, m/s), ...)
    mean: float = 8.0
    amplitude: float = 0.5
    period: float = 60.0


@dataclass(frozen=True)
class DieselSection:
    k_dg: float = 1.0
    t_dg: float = 2.0
    k_dt: float = 1.0
    t_dt: float = 20.0
    rated_power_kw: float = 40.0
    grc_fraction: float = 0.03
    grc_basis: str = "second"  # second | minute


@dataclass(frozen=True)
class ControllerSection:
    kp: float = REFERENCE_GAINS_295[0]
    ki: float = REFERENCE_GAINS_295[1]
    droop: float = REFERENCE_GAINS_295[2]


@dataclass(frozen=True)
class GridSection:
    inertia_h: float = 5.0
    damping_mw_per_hz: float = 0.012
    nominal_frequency: float = 50.0
    base_power_kw: float = 350.0


@dataclass(frozen=True)
class SolverSection:
    dt: float = 0.01
    t_end: float = 1800.0
    scheme: str = "rk4"
    decimation: int = 10
    steady_window: float = 60.0


@dataclass(frozen=True)
class LoadSection:
    steps: tuple = ((0.0, 295.0), (60.0, 306.0))  # ((t, kW), ...)


@dataclass(frozen=True)
class DispatchSection:
    wind_setpoint: tuple = ((0.0, 275.0), (60.0, 276.0))  # ((t, kW), ...)
    deload_fraction: float | None = None
    diesel_initial_kw: float | None = None


@dataclass(frozen=True)
class TuningSection:
    population: int = 100
    iterations: int = 150
    inertia: float = 0.729
    cognitive: float = 1.494
    social: float = 1.494
    lower: tuple = (0.0, 0.0, 0.05)
    upper: tuple = (10.0, 1.0, 1.0)
    seed: int = 0
    workers: int = 1
    seed_configured_gains: bool = True


SECTIONS = {
    "wind": WindSection,
    "wind_speed": WindSpeedSection,
    "diesel": DieselSection,
    "controller": ControllerSection,
    "grid": GridSection,
    "solver": SolverSection,
    "load": LoadSection,
    "dispatch": DispatchSection,
    "tuning": TuningSection,
}

_PAIR_LISTS = {("wind_speed", "steps"), ("load", "steps"), ("dispatch", "wind_setpoint")}
_VECTORS = {("tuning", "lower"), ("tuning", "upper")}
_OPTIONAL_FLOATS = {("dispatch", "deload_fraction"), ("dispatch", "diesel_initial_kw")}


@dataclass(frozen=True)
class Scenario:
    wind: WindSection = field(default_factory=WindSection)
    wind_speed: WindSpeedSection = field(default_factory=WindSpeedSection)
    diesel: DieselSection = field(default_factory=DieselSection)
    controller: ControllerSection = field(default_factory=ControllerSection)
    grid: GridSection = field(default_factory=GridSection)
    solver: SolverSection = field(default_factory=SolverSection)
    load: LoadSection = field(default_factory=LoadSection)
    dispatch: DispatchSection = field(default_factory=DispatchSection)
    tuning: TuningSection = field(default_factory=TuningSection)

    # ---- conversions to plant parameters (SI units) ----

    def wind_params(self) -> WindPlantParams:
        w = self.wind
        return WindPlantParams(
            air_density=w.air_density, blade_radius=w.blade_radius, gear_ratio=w.gear_ratio,
            cp_coefficients=w.cp_coefficients, pitch_angle=w.pitch_angle,
            tip_speed_ratio=w.tip_speed_ratio, rated_power=w.rated_power_kw * 1e3,
            lag_ti=w.lag_ti, lag_tpt=w.lag_tpt, freq_band=w.freq_band_hz,
            inertial_gain=w.inertial_gain_kw_per_hz_s * 1e3)

    def grid_params(self) -> GridParams:
        g = self.grid
        return GridParams(inertia=g.inertia_h, damping=g.damping_mw_per_hz * 1e6,
                          nominal_frequency=g.nominal_frequency, base_power=g.base_power_kw * 1e3)

    def grc_rate(self) -> float:
        """Generation rate limit in W/s."""
        d = self.diesel
        per = 1.0 if d.grc_basis == "second" else 60.0
        return d.grc_fraction * d.rated_power_kw * 1e3 / per

    def diesel_params(self, gains=None) -> DieselPlantParams:
        d, c, g = self.diesel, self.controller, self.grid
        kp, ki, droop = (c.kp, c.ki, c.droop) if gains is None else map(float, gains)
        return DieselPlantParams(
            k_dg=d.k_dg, t_dg=d.t_dg, k_dt=d.k_dt, t_dt=d.t_dt, droop=droop, kp=kp, ki=ki,
            grc_rate=self.grc_rate(), rated_power=d.rated_power_kw * 1e3,
            setpoint=self.initial_diesel_power(), base_power=g.base_power_kw * 1e3,
            nominal_frequency=g.nominal_frequency)

    def solver_settings(self) -> SolverSettings:
        s = self.solver
        return SolverSettings(dt=s.dt, t_end=s.t_end, scheme=Scheme.parse(s.scheme),
                              decimation=s.decimation)

    def pso_settings(self, **overrides) -> PsoSettings:
        t = self.tuning
        kw = dict(population=t.population, iterations=t.iterations, inertia=t.inertia,
                  cognitive=t.cognitive, social=t.social, lower=t.lower, upper=t.upper,
                  seed=t.seed, workers=t.workers)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return PsoSettings(**kw)

    @property
    def gains(self) -> tuple[float, float, float]:
        return (self.controller.kp, self.controller.ki, self.controller.droop)

    def with_gains(self, gains) -> "Scenario":
        kp, ki, droop = (float(v) for v in gains)
        return dataclasses.replace(self, controller=ControllerSection(kp=kp, ki=ki, droop=droop))

    def with_solver(self, dt: float | None = None, t_end: float | None = None) -> "Scenario":
        changes = {k: v for k, v in (("dt", dt), ("t_end", t_end)) if v is not None}
        if t_end is not None:
            changes["steady_window"] = min(self.solver.steady_window, t_end)
        return dataclasses.replace(self, solver=dataclasses.replace(self.solver, **changes))

    # ---- profiles ----

    def wind_speed_at(self, t: float) -> float:
        ws = self.wind_speed
        if ws.kind == "constant":
            return ws.value
        if ws.kind == "steps":
            v = ws.steps[0][1]
            for t_k, v_k in ws.steps:
                if t_k <= t:
                    v = v_k
            return v
        return max(0.0, ws.mean + ws.amplitude * math.sin(2.0 * math.pi * t / ws.period))

    def initial_wind_setpoint(self) -> float:
        """Wind set point at t = 0 in W."""
        if self.dispatch.deload_fraction is not None:
            p_avail = available_power(self.wind_params(), self.wind_speed_at(0.0))
            return (1.0 - self.dispatch.deload_fraction) * p_avail
        return self.dispatch.wind_setpoint[0][1] * 1e3

    def initial_diesel_power(self) -> float:
        """Diesel output at t = 0 in W (balances the initial load unless given)."""
        if self.dispatch.diesel_initial_kw is not None:
            return self.dispatch.diesel_initial_kw * 1e3
        return self.load.steps[0][1] * 1e3 - self.initial_wind_setpoint()

    def segment_bounds(self) -> list[tuple[float, float]]:
        times = [t for t, _ in self.load.steps] + [self.solver.t_end]
        return list(zip(times[:-1], times[1:]))

    # ---- validation ----

    def validate(self) -> "Scenario":
        """Check every constraint; raises ScenarioError naming the offending field."""
        _validate(self)
        return self


def _check_schedule(name: str, steps, t_end: float, lo: float = 0.0, hi: float = math.inf):
    if not steps:
        raise ScenarioError(f"{name}: at least one [time, value] entry is required")
    if steps[0][0] != 0.0:
        raise ScenarioError(f"{name}[0]: first entry must start at t = 0, got {steps[0][0]}")
    for i, (t, v) in enumerate(steps):
        if i and not t > steps[i - 1][0]:
            raise ScenarioError(f"{name}[{i}]: times must be strictly increasing")
        if t >= t_end and i:
            raise ScenarioError(f"{name}[{i}]: time {t} s is not before solver.t_end={t_end}")
        if not (math.isfinite(v) and lo <= v <= hi):
            raise ScenarioError(f"{name}[{i}]: value {v} outside [{lo}, {hi}]")


def _validate(sc: Scenario) -> None:
    try:
        wind = sc.wind_params()
    except ValueError as exc:
        raise ScenarioError(f"wind: {exc}") from None
    try:
        sc.grid_params()
    except ValueError as exc:
        raise ScenarioError(f"grid: {exc}") from None
    try:
        solver = sc.solver_settings()
    except ValueError as exc:
        raise ScenarioError(f"solver: {exc}") from None
    if not 0.0 < sc.solver.steady_window <= sc.solver.t_end:
        raise ScenarioError("solver.steady_window must lie in (0, t_end]")

    d = sc.diesel
    if d.grc_basis not in ("second", "minute"):
        raise ScenarioError(f"diesel.grc_basis: expected 'second' or 'minute', got {d.grc_basis!r}")
    if not d.grc_fraction >= 0.0:
        raise ScenarioError("diesel.grc_fraction must be >= 0")
    for name in ("kp", "ki"):
        if not getattr(sc.controller, name) >= 0.0:
            raise ScenarioError(f"controller.{name} must be >= 0")
    if not sc.controller.droop > 0.0:
        raise ScenarioError("controller.droop must be > 0")

    ws = sc.wind_speed
    if ws.kind not in ("constant", "steps", "sine"):
        raise ScenarioError(f"wind_speed.kind: expected constant, steps or sine, got {ws.kind!r}")
    if ws.kind == "constant" and not ws.value >= 0.0:
        raise ScenarioError("wind_speed.value must be >= 0")
    if ws.kind == "steps":
        _check_schedule("wind_speed.steps", ws.steps, sc.solver.t_end)
    if ws.kind == "sine" and not (ws.period > 0.0 and ws.mean >= 0.0 and ws.amplitude >= 0.0):
        raise ScenarioError("wind_speed: sine needs period > 0, mean >= 0, amplitude >= 0")

    capacity_kw = sc.wind.rated_power_kw + d.rated_power_kw
    _check_schedule("load.steps", sc.load.steps, sc.solver.t_end)
    for i, (_, v) in enumerate(sc.load.steps):
        if v > capacity_kw:
            raise ScenarioError(
                f"load.steps[{i}]: {v} kW exceeds installed capacity {capacity_kw} kW")

    disp = sc.dispatch
    if disp.deload_fraction is not None:
        if not 0.0 <= disp.deload_fraction < 1.0:
            raise ScenarioError("dispatch.deload_fraction must lie in [0, 1)")
    else:
        _check_schedule("dispatch.wind_setpoint", disp.wind_setpoint, sc.solver.t_end,
                        hi=sc.wind.rated_power_kw)
        p_avail = available_power(wind, sc.wind_speed_at(0.0))
        if disp.wind_setpoint[0][1] * 1e3 > p_avail:
            raise ScenarioError(
                f"dispatch.wind_setpoint[0]: {disp.wind_setpoint[0][1]} kW exceeds available "
                f"wind power {p_avail / 1e3:.3f} kW")

    p_w0 = sc.initial_wind_setpoint()
    p_d0 = sc.initial_diesel_power()
    p_l0 = sc.load.steps[0][1] * 1e3
    imbalance = p_w0 + p_d0 - p_l0
    if abs(imbalance) > BALANCE_TOLERANCE_W:
        raise ScenarioError(
            f"dispatch: initial generation {(p_w0 + p_d0) / 1e3:.3f} kW does not balance initial "
            f"load {p_l0 / 1e3:.3f} kW (imbalance {imbalance:.3f} W)")
    if not 0.0 <= p_d0 <= d.rated_power_kw * 1e3:
        raise ScenarioError(
            f"dispatch: initial diesel output {p_d0 / 1e3:.3f} kW outside [0, {d.rated_power_kw}] kW")

    try:
        sc.diesel_params()
        sc.pso_settings()
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None

    check_operating_point(wind)
    solver.check_stability([wind.lag_ti, wind.lag_tpt, d.t_dg, d.t_dt])


# --------------------------------------------------------------------------
# parsing / serialisation
# --------------------------------------------------------------------------


def _number(where: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _coerce(section: str, name: str, value, default):
    where = f"{section}.{name}"
    if (section, name) in _PAIR_LISTS:
        if not isinstance(value, list):
            raise ScenarioError(f"{where}: expected a list of [time, value] pairs")
        out = []
        for i, pair in enumerate(value):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ScenarioError(f"{where}[{i}]: expected [time, value]")
            out.append((_number(f"{where}[{i}]", pair[0]), _number(f"{where}[{i}]", pair[1])))
        return tuple(out)
    if (section, name) in _VECTORS:
        if not isinstance(value, list):
            raise ScenarioError(f"{where}: expected a list of numbers")
        return tuple(_number(f"{where}[{i}]", v) for i, v in enumerate(value))
    if name == "cp_coefficients":
        if not isinstance(value, list) or len(value) != 5 or any(
                not isinstance(r, list) or len(r) != 5 for r in value):
            raise ScenarioError(f"{where}: expected a 5x5 array of numbers")
        return tuple(tuple(_number(f"{where}[{i}][{j}]", v) for j, v in enumerate(r))
                     for i, r in enumerate(value))
    if (section, name) in _OPTIONAL_FLOATS:
        return _number(where, value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ScenarioError(f"{where}: expected true or false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"{where}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        return _number(where, value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ScenarioError(f"{where}: expected a string, got {value!r}")
        return value
    raise ScenarioError(f"{where}: unsupported value {value!r}")


def scenario_from_dict(data: dict) -> Scenario:
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ScenarioError(f"unknown section(s): {', '.join(sorted(unknown))}")
    sections = {}
    for sec_name, cls in SECTIONS.items():
        raw = data.get(sec_name, {})
        if not isinstance(raw, dict):
            raise ScenarioError(f"{sec_name}: expected a table")
        fields = {f.name: f for f in dataclasses.fields(cls)}
        extra = set(raw) - set(fields)
        if extra:
            raise ScenarioError(f"{sec_name}: unknown key(s): {', '.join(sorted(extra))}")
        defaults = cls()
        kwargs = {k: _coerce(sec_name, k, v, getattr(defaults, k)) for k, v in raw.items()}
        sections[sec_name] = cls(**kwargs)
    return Scenario(**sections)


def parse_scenario(text: str) -> Scenario:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"parse error: {exc}") from None
    return scenario_from_dict(data).validate()


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    try:
        return parse_scenario(text)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def builtin_scenario(name: str) -> Scenario:
    res = resources.files("winddiesel") / "scenarios" / f"{name}.toml"
    if not res.is_file():
        raise ScenarioError(f"no built-in scenario named {name!r}")
    return parse_scenario(res.read_text())


def builtin_scenario_names() -> list[str]:
    folder = resources.files("winddiesel") / "scenarios"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".toml"))


def _plain(value):
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def scenario_to_dict(sc: Scenario) -> dict:
    out = {}
    for sec_name in SECTIONS:
        section = getattr(sc, sec_name)
        out[sec_name] = {f.name: _plain(getattr(section, f.name))
                         for f in dataclasses.fields(section)
                         if getattr(section, f.name) is not None}
    return out


def dump_scenario(sc: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(sc))


def save_scenario(sc: Scenario, path) -> Path:
    path = Path(path)
    path.write_text(dump_scenario(sc))
    return path
