"""Simulation orchestration, summaries, CSV output and gain tuning.

A run couples the wind plant, the diesel plant and the frequency model in one
fixed-step loop. Within a step each subsystem sees the other signals held at
their start-of-step values. The loop is compiled, and the tuner uses the same
kernel, so a tuned cost and a reported ISE always agree.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numba import njit

from .diesel import diesel_advance
from .errors import SimulationFault
from .grid import frequency_advance, rocof_kernel
from .pso import PsoResult, PsoSettings, pso_optimize, write_convergence_csv
from .scenario import Scenario, save_scenario
from .sim_core import saturate
from .wind import available_power_kernel, wind_advance

log = logging.getLogger(__name__)

CSV_HEADER = ("t", "delta_f_hz", "p_wind_kw", "p_diesel_kw", "p_load_kw", "p_reserve_kw", "u_pi")

# Cost assigned to a candidate whose simulation faults, so the swarm keeps going.
PENALTY_COST = 1.0e6

_OK, _FAULT_STATE, _FAULT_TORQUE = 0, 1, 2
_WIND_CONSTANT, _WIND_STEPS, _WIND_SINE = 0, 1, 2


class TimeSeriesRecord(NamedTuple):
    t: float
    delta_f_hz: float
    p_wind_kw: float
    p_diesel_kw: float
    p_load_kw: float
    p_reserve_kw: float
    u_pi: float


@dataclass
class TimeSeries:
    t: np.ndarray
    delta_f: np.ndarray  # Hz
    p_wind: np.ndarray  # kW
    p_diesel: np.ndarray  # kW
    p_load: np.ndarray  # kW
    p_reserve: np.ndarray  # kW
    u_pi: np.ndarray  # p.u.
    rocof: np.ndarray = field(default=None, repr=False)  # Hz/s, not written to CSV

    def __len__(self):
        return len(self.t)

    def records(self):
        for row in zip(self.t, self.delta_f, self.p_wind, self.p_diesel, self.p_load,
                       self.p_reserve, self.u_pi):
            yield TimeSeriesRecord(*(float(v) for v in row))


@dataclass(frozen=True)
class SegmentSummary:
    t_start: float
    t_end: float
    p_load_kw: float
    p_wind_kw: float  # mean over the steady window
    p_diesel_kw: float
    max_abs_delta_f: float
    final_abs_delta_f: float


@dataclass(frozen=True)
class Summary:
    segments: tuple
    ise: float
    max_abs_delta_f: float
    final_delta_f: float
    min_reserve_kw: float
    gains: tuple
    wall_time_s: float

    def to_text(self) -> str:
        kp, ki, droop = self.gains
        lines = [
            f"kp = {kp!r}",
            f"ki = {ki!r}",
            f"droop = {droop!r}",
            f"ise = {self.ise!r}",
            f"max_abs_delta_f_hz = {self.max_abs_delta_f!r}",
            f"final_delta_f_hz = {self.final_delta_f!r}",
            f"min_reserve_kw = {self.min_reserve_kw!r}",
            f"wall_time_s = {self.wall_time_s:.3f}",
        ]
        for i, s in enumerate(self.segments):
            lines.append("")
            lines.append(f"[segment {i}] t = {s.t_start:g} .. {s.t_end:g} s, load = {s.p_load_kw:g} kW")
            lines.append(f"  steady p_wind_kw = {s.p_wind_kw:.4f}")
            lines.append(f"  steady p_diesel_kw = {s.p_diesel_kw:.4f}")
            lines.append(f"  max_abs_delta_f_hz = {s.max_abs_delta_f:.6g}")
            lines.append(f"  final_abs_delta_f_hz = {s.final_abs_delta_f:.6g}")
        return "\n".join(lines) + "\n"


@dataclass
class SimulationResult:
    series: TimeSeries
    summary: Summary


# --------------------------------------------------------------------------
# compiled loop
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _advance_pointer(idx, k, ptr):
    while ptr + 1 < idx.shape[0] and idx[ptr + 1] <= k:
        ptr += 1
    return ptr


@njit(cache=True, nogil=True)
def _simulate(n, dt, scheme, dec,
              load_idx, load_w, cmd_idx, cmd_w, deload,
              vw_kind, vw_idx, vw_val, vw_mean, vw_amp, vw_period,
              wind_p, alpha, diesel_p, grid_p, p_wind0, p_diesel0):
    rho, area, radius, lam, beta, w_rated, t_i, t_pt, band, k_in = wind_p
    k_dg, t_dg, k_dt, t_dt, droop, kp, ki, grc, d_rated, setpoint, base, f_nom = diesel_p
    m, d = grid_p

    rec = np.zeros((n // dec + 1, 8))
    x1 = p_wind0
    x2 = p_wind0
    gov = p_diesel0
    turb = p_diesel0
    p_d = p_diesel0
    integral = 0.0
    last_err = 0.0
    u = 0.0
    df = 0.0
    ise = 0.0
    e_prev = 0.0
    li = 0
    ci = 0
    wi = 0
    for k in range(n + 1):
        t = k * dt
        li = _advance_pointer(load_idx, k, li)
        p_load = load_w[li]
        if vw_kind == 0:
            vw = vw_val[0]
        elif vw_kind == 1:
            wi = _advance_pointer(vw_idx, k, wi)
            vw = vw_val[wi]
        else:
            vw = vw_mean + vw_amp * np.sin(2.0 * np.pi * t / vw_period)
            if vw < 0.0:
                vw = 0.0
        p_avail, omega = available_power_kernel(vw, rho, area, radius, lam, beta, alpha, w_rated)
        if deload >= 0.0:
            p_cmd = (1.0 - deload) * p_avail
        else:
            ci = _advance_pointer(cmd_idx, k, ci)
            p_cmd = cmd_w[ci]

        p_w = saturate(x2, 0.0, p_avail)
        mismatch = p_w + p_d - p_load
        rocof = rocof_kernel(df, mismatch, m, d)
        e = df / f_nom
        if k > 0:
            ise += 0.5 * dt * (e_prev * e_prev + e * e)
        e_prev = e
        if k % dec == 0:
            r = k // dec
            rec[r, 0] = t
            rec[r, 1] = df
            rec[r, 2] = p_w
            rec[r, 3] = p_d
            rec[r, 4] = p_load
            rec[r, 5] = p_avail - p_w
            rec[r, 6] = u
            rec[r, 7] = rocof
        if k == n:
            break

        x1, x2, p_ref, _ = wind_advance(x1, x2, p_avail, p_cmd, df, rocof, band, k_in,
                                        t_i, t_pt, dt, scheme)
        if omega <= 0.0 and p_ref > 0.0:
            return rec, ise, _FAULT_TORQUE, k
        integral, last_err, gov, turb, p_d, u = diesel_advance(
            integral, last_err, gov, turb, p_d, df, kp, ki, droop, setpoint, base, f_nom,
            k_dg, t_dg, k_dt, t_dt, grc, d_rated, dt, scheme)
        df = frequency_advance(df, mismatch, m, d, dt, scheme)
        if not np.isfinite(df) or abs(df) >= f_nom:
            return rec, ise, _FAULT_STATE, k + 1
    return rec, ise, _OK, n


def _step_indices(schedule, dt):
    idx = np.array([int(round(t / dt)) for t, _ in schedule], dtype=np.int64)
    return idx


def _kernel_args(sc: Scenario, gains=None):
    solver = sc.solver_settings()
    wind = sc.wind_params()
    diesel = sc.diesel_params(gains)
    grid = sc.grid_params()
    dt = solver.dt

    load_idx = _step_indices(sc.load.steps, dt)
    load_w = np.array([v * 1e3 for _, v in sc.load.steps])
    if sc.dispatch.deload_fraction is not None:
        deload = float(sc.dispatch.deload_fraction)
        cmd_idx = np.zeros(1, dtype=np.int64)
        cmd_w = np.zeros(1)
    else:
        deload = -1.0
        cmd_idx = _step_indices(sc.dispatch.wind_setpoint, dt)
        cmd_w = np.array([v * 1e3 for _, v in sc.dispatch.wind_setpoint])

    ws = sc.wind_speed
    if ws.kind == "steps":
        vw_kind, vw_idx, vw_val = _WIND_STEPS, _step_indices(ws.steps, dt), np.array([v for _, v in ws.steps])
    else:
        vw_kind = _WIND_CONSTANT if ws.kind == "constant" else _WIND_SINE
        vw_idx, vw_val = np.zeros(1, dtype=np.int64), np.array([float(ws.value)])

    wind_p = (wind.air_density, wind.swept_area, wind.blade_radius, wind.tip_speed_ratio,
              wind.pitch_angle, wind.rated_power, wind.lag_ti, wind.lag_tpt, wind.freq_band,
              wind.inertial_gain)
    diesel_p = (diesel.k_dg, diesel.t_dg, diesel.k_dt, diesel.t_dt, diesel.droop, diesel.kp,
                diesel.ki, diesel.grc_rate, diesel.rated_power, diesel.setpoint,
                diesel.base_power, diesel.nominal_frequency)
    grid_p = (grid.inertia_w_s_per_hz, grid.damping)
    return (solver.n_steps, dt, int(solver.scheme), int(solver.decimation),
            load_idx, load_w, cmd_idx, cmd_w, deload,
            vw_kind, vw_idx, vw_val, float(ws.mean), float(ws.amplitude), float(ws.period),
            tuple(float(v) for v in wind_p), wind.alpha, tuple(float(v) for v in diesel_p),
            tuple(float(v) for v in grid_p),
            float(sc.initial_wind_setpoint()), float(sc.initial_diesel_power()))


def _series_from_records(rec) -> TimeSeries:
    return TimeSeries(t=rec[:, 0].copy(), delta_f=rec[:, 1].copy(), p_wind=rec[:, 2] / 1e3,
                      p_diesel=rec[:, 3] / 1e3, p_load=rec[:, 4] / 1e3,
                      p_reserve=rec[:, 5] / 1e3, u_pi=rec[:, 6].copy(), rocof=rec[:, 7].copy())


def summarize(sc: Scenario, series: TimeSeries, ise_value: float, gains, wall: float) -> Summary:
    window = sc.solver.steady_window
    segments = []
    t = series.t
    # half a record spacing absorbs accumulated rounding in k*dt
    tol = 0.5 * sc.solver.dt * sc.solver.decimation
    for (a, b), (_, load_kw) in zip(sc.segment_bounds(), sc.load.steps):
        in_seg = (t >= a - tol) & (t <= b + tol)
        steady = (t >= b - window - tol) & (t <= b + tol)
        end_idx = int(np.nonzero(t <= b + tol)[0][-1])
        segments.append(SegmentSummary(
            t_start=a, t_end=b, p_load_kw=load_kw,
            p_wind_kw=float(series.p_wind[steady].mean()),
            p_diesel_kw=float(series.p_diesel[steady].mean()),
            max_abs_delta_f=float(np.abs(series.delta_f[in_seg]).max()),
            final_abs_delta_f=float(abs(series.delta_f[end_idx]))))
    return Summary(segments=tuple(segments), ise=float(ise_value),
                   max_abs_delta_f=float(np.abs(series.delta_f).max()),
                   final_delta_f=float(series.delta_f[-1]),
                   min_reserve_kw=float(series.p_reserve.min()),
                   gains=tuple(float(g) for g in gains), wall_time_s=wall)


def run_simulation(sc: Scenario, gains=None) -> SimulationResult:
    """Run ``sc`` (optionally with overriding (kp, ki, droop)) and summarise it.

    Raises SimulationFault if the state leaves its valid range.
    """
    gains = sc.gains if gains is None else tuple(float(g) for g in gains)
    start = time.perf_counter()
    rec, ise_value, status, k = _simulate(*_kernel_args(sc, gains))
    wall = time.perf_counter() - start
    if status != _OK:
        what = "torque command undefined (zero rotor speed)" if status == _FAULT_TORQUE \
            else "frequency deviation non-finite or beyond nominal frequency"
        raise SimulationFault(what, t=k * sc.solver.dt)
    series = _series_from_records(rec)
    return SimulationResult(series=series, summary=summarize(sc, series, ise_value, gains, wall))


def _with_gains(args, gains):
    diesel_p = list(args[17])
    diesel_p[4:7] = (gains[2], gains[0], gains[1])  # droop, kp, ki
    return args[:17] + (tuple(diesel_p),) + args[18:]


def _cost(args, gains) -> float:
    kp, ki, droop = (float(g) for g in gains)
    if not (kp >= 0.0 and ki >= 0.0 and droop > 0.0):
        return PENALTY_COST
    _, ise_value, status, _ = _simulate(*_with_gains(args, (kp, ki, droop)))
    if status != _OK or not math.isfinite(ise_value):
        return PENALTY_COST
    return float(ise_value)


def evaluate_candidate(gains, sc: Scenario) -> float:
    """ISE of ``sc`` run with (kp, ki, droop) = ``gains``; PENALTY_COST on a fault."""
    return _cost(_kernel_args(sc), gains)


# --------------------------------------------------------------------------
# output files
# --------------------------------------------------------------------------


def write_timeseries_csv(series: TimeSeries, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for rec in series.records():
            w.writerow([repr(v) for v in rec])
    return path


def read_timeseries_csv(path) -> TimeSeries:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        rows = [[float(v) for v in row] for row in reader]
    cols = np.array(rows, dtype=float).reshape(-1, len(CSV_HEADER)).T
    return TimeSeries(*cols)


def write_gnuplot_script(csv_path, path) -> Path:
    csv_name = Path(csv_path).name
    script = f"""# gnuplot -p {Path(path).name}
set datafile separator ','
set key autotitle columnhead
set xlabel 't [s]'
set multiplot layout 2,1
set ylabel 'power [kW]'
plot '{csv_name}' using 1:3 with lines title 'wind', \\
     '' using 1:4 with lines title 'diesel', \\
     '' using 1:5 with lines title 'load'
set ylabel 'delta f [Hz]'
plot '{csv_name}' using 1:2 with lines title 'delta f'
unset multiplot
"""
    path = Path(path)
    path.write_text(script)
    return path


def write_simulation_outputs(result: SimulationResult, out_dir, plot: bool = False) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = write_timeseries_csv(result.series, out / "timeseries.csv")
    (out / "summary.txt").write_text(result.summary.to_text())
    if plot:
        write_gnuplot_script(csv_path, out / "plot.gp")
    return out


# --------------------------------------------------------------------------
# tuning
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TuneReport:
    gains: tuple
    ise: float
    benchmark_gains: tuple | None
    benchmark_ise: float | None
    result: PsoResult
    settings: PsoSettings
    wall_time_s: float

    def to_text(self) -> str:
        kp, ki, droop = self.gains
        lines = [f"kp = {kp!r}", f"ki = {ki!r}", f"droop = {droop!r}", f"ise = {self.ise!r}",
                 f"population = {self.settings.population}",
                 f"iterations = {self.settings.iterations}",
                 f"seed = {self.settings.seed}",
                 f"evaluations = {self.result.evaluations}",
                 f"wall_time_s = {self.wall_time_s:.3f}"]
        if self.benchmark_gains is not None:
            lines.append(f"benchmark_gains = {list(self.benchmark_gains)!r}")
            lines.append(f"benchmark_ise = {self.benchmark_ise!r}")
        return "\n".join(lines) + "\n"


class _Fitness:
    """Picklable, thread-safe fitness closure over a scenario."""

    def __init__(self, sc: Scenario):
        self.args = _kernel_args(sc)

    def __call__(self, x):
        return _cost(self.args, x)


def tune(sc: Scenario, settings: PsoSettings | None = None, progress=None) -> TuneReport:
    """PSO search over (kp, ki, droop) minimising the scenario's ISE.

    With ``tuning.seed_configured_gains`` the scenario's own gains start in the
    swarm, so the result is never worse than them.
    """
    settings = sc.pso_settings() if settings is None else settings
    seeds = [sc.gains] if sc.tuning.seed_configured_gains else []
    start = time.perf_counter()
    result = pso_optimize(_Fitness(sc), settings, seed_points=seeds, callback=progress)
    wall = time.perf_counter() - start
    bench_ise = evaluate_candidate(sc.gains, sc) if seeds else None
    return TuneReport(gains=tuple(float(v) for v in result.best_position), ise=result.best_cost,
                      benchmark_gains=sc.gains if seeds else None, benchmark_ise=bench_ise,
                      result=result, settings=settings, wall_time_s=wall)


def write_tune_outputs(report: TuneReport, sc: Scenario, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_convergence_csv(report.result.trace, out / "convergence.csv")
    (out / "tuning.txt").write_text(report.to_text())
    save_scenario(sc.with_gains(report.gains), out / "tuned_scenario.toml")
    return out
