"""Particle swarm optimisation and the ISE cost.

Every particle owns a random stream spawned from one master seed, and fitness
evaluations never touch those streams, so results do not depend on how many
worker threads evaluate the swarm.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np

log = logging.getLogger(__name__)

GAIN_NAMES = ("kp", "ki", "droop")


def ise(delta_f, delta_p_tie, dt: float) -> float:
    """Trapezoidal integral of delta_f**2 + delta_p_tie**2 sampled every ``dt``."""
    df = np.asarray(delta_f, dtype=float)
    tie = np.asarray(delta_p_tie, dtype=float)
    if df.size == 0:
        raise ValueError("ise needs at least one sample")
    if df.shape != tie.shape:
        raise ValueError(f"series lengths differ: {df.shape} vs {tie.shape}")
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    y = df * df + tie * tie
    return float(np.trapezoid(y, dx=dt))


@dataclass(frozen=True)
class PsoSettings:
    population: int = 100
    iterations: int = 150
    inertia: float = 0.729
    cognitive: float = 1.494
    social: float = 1.494
    lower: tuple = (0.0, 0.0, 0.05)
    upper: tuple = (10.0, 1.0, 1.0)
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        if self.population < 2:
            raise ValueError(f"population must be >= 2, got {self.population}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if len(self.lower) != len(self.upper) or not self.lower:
            raise ValueError("lower and upper bounds must have the same nonzero length")
        for i, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if not lo < hi:
                raise ValueError(f"bounds[{i}]: lower {lo} must be < upper {hi}")
        for name in ("inertia", "cognitive", "social"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def dim(self) -> int:
        return len(self.lower)


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray
    best_cost: float = math.inf
    rng: np.random.Generator = field(repr=False, default=None)


class PsoResult(NamedTuple):
    best_position: np.ndarray
    best_cost: float
    trace: list
    evaluations: int


def _evaluate(fitness, positions, workers):
    if workers == 1:
        costs = [fitness(p) for p in positions]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            costs = list(pool.map(fitness, positions))
    out = []
    for p, c in zip(positions, costs):
        c = float(c)
        if not math.isfinite(c):
            log.warning("discarding candidate %s: non-finite fitness %r", p.tolist(), c)
            c = math.inf
        out.append(c)
    return out


def pso_optimize(fitness: Callable[[np.ndarray], float], settings: PsoSettings,
                 seed_points: Sequence[Sequence[float]] = (),
                 callback: Callable[[int, float], None] | None = None) -> PsoResult:
    """Minimise ``fitness`` over the box given by ``settings``.

    Uses the inertia-weight update v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x).
    Positions are clamped to the box and the clamped velocity components set
    to zero. ``seed_points`` replace the initial positions of the first
    particles, so the result is never worse than the best of them.

    Iteration 1 evaluates the initial swarm; each further iteration moves and
    re-evaluates it. ``trace[k]`` is the global-best cost after iteration k+1.
    """
    s = settings
    lo = np.array(s.lower)
    hi = np.array(s.upper)
    if len(seed_points) > s.population:
        raise ValueError("more seed points than particles")

    streams = np.random.SeedSequence(s.seed).spawn(s.population)
    swarm = []
    for k, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        x = rng.uniform(lo, hi)
        if k < len(seed_points):
            x = np.clip(np.asarray(seed_points[k], dtype=float), lo, hi)
        swarm.append(Particle(position=x, velocity=np.zeros(s.dim), best_position=x.copy(), rng=rng))

    best_x = swarm[0].position.copy()
    best_cost = math.inf
    trace = []
    evaluations = 0

    for it in range(s.iterations):
        if it > 0:
            for p in swarm:
                r1 = p.rng.random(s.dim)
                r2 = p.rng.random(s.dim)
                p.velocity = (s.inertia * p.velocity
                              + s.cognitive * r1 * (p.best_position - p.position)
                              + s.social * r2 * (best_x - p.position))
                x = p.position + p.velocity
                clamped = (x < lo) | (x > hi)
                p.position = np.clip(x, lo, hi)
                p.velocity[clamped] = 0.0

        costs = _evaluate(fitness, [p.position for p in swarm], s.workers)
        evaluations += len(costs)
        for p, c in zip(swarm, costs):
            if c < p.best_cost:
                p.best_cost = c
                p.best_position = p.position.copy()
            if c < best_cost:
                best_cost = c
                best_x = p.position.copy()
        trace.append(best_cost)
        if callback is not None:
            callback(it + 1, best_cost)

    assert all(b <= a for a, b in zip(trace, trace[1:])), "global best increased"
    return PsoResult(best_x, best_cost, trace, evaluations)


def write_convergence_csv(trace: Sequence[float], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "best_cost"])
        for k, c in enumerate(trace, start=1):
            w.writerow([k, repr(float(c))])
    return path
