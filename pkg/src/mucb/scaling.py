"""Regret-scaling studies in the number of segments or arms, and the power-law fit."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .detect import calibrate_threshold
from .env import Environment, make_piecewise_env
from .policies import PolicySpec
from .sim import monte_carlo
from .tuning import tune_gamma


@dataclass(frozen=True)
class ScalingPreset:
    """Instance sizes and M-UCB parameter rule for one scale.

    The detector threshold uses the horizon and arm-count upper bounds
    ``T_bound``/``K_bound``; gamma is the empirical closed form evaluated on
    each instance's own M, K and T.
    """

    segment_length: int  # M axis
    K_for_M_axis: int
    M_for_K_axis: int
    T_for_K_axis: int
    w: int
    T_bound: int
    K_bound: int
    delta: float
    instances: int
    runs: int
    spread: float = 0.6
    M_grid: tuple[int, ...] = tuple(range(2, 11))
    K_grid: tuple[int, ...] = (2, 4, 6, 8, 10)

    @property
    def b(self) -> float:
        return calibrate_threshold(self.w, self.K_bound, self.T_bound)

    def mucb_spec(self, env: Environment) -> PolicySpec:
        gamma = tune_gamma(self.w, self.b, self.delta, env.M, env.K, env.T, "empirical")
        return PolicySpec("m_ucb", {"w": self.w, "b": self.b, "gamma": gamma})


FULL_SCALE = ScalingPreset(segment_length=20_000, K_for_M_axis=10, M_for_K_axis=4, T_for_K_axis=300_000,
                            w=800, T_bound=20_000 * 25, K_bound=10, delta=0.6, instances=100, runs=50)
# sizes shrunk tenfold, parameter rule unchanged (w, b and the gamma formula as at full scale)
DESK_SCALE = ScalingPreset(segment_length=2_000, K_for_M_axis=10, M_for_K_axis=4, T_for_K_axis=30_000,
                           w=800, T_bound=20_000 * 25, K_bound=10, delta=0.6, instances=20, runs=10)
PRESETS = {"desk": DESK_SCALE, "full": FULL_SCALE}


def spread_means(rng: np.random.Generator, K: int, spread: float, max_tries: int = 10_000) -> np.ndarray:
    """Uniform mean vector whose largest and smallest entries differ by more than ``spread``."""
    for _ in range(max_tries):
        mu = rng.random(K)
        if mu.max() - mu.min() > spread:
            return mu
    raise RuntimeError(f"no mean vector with spread > {spread} after {max_tries} draws (K={K})")


def flip_instance(rng: np.random.Generator, K: int, M: int, segment_length: int,
                  spread: float = 0.6) -> Environment:
    """Segments alternate between ``mu`` and ``1 - mu``; T = segment_length * M."""
    mu = spread_means(rng, K, spread)
    means = [mu if i % 2 == 0 else 1.0 - mu for i in range(M)]
    return make_piecewise_env(K, [segment_length] * M, means)


def random_instance(rng: np.random.Generator, K: int, M: int, T: int,
                    spread: float = 0.6) -> Environment:
    """Independent spread-constrained means per segment, evenly spaced change points."""
    base = T // M
    lengths = [base] * (M - 1) + [T - base * (M - 1)]
    return make_piecewise_env(K, lengths, [spread_means(rng, K, spread) for _ in range(M)])


@dataclass(frozen=True)
class ScalingPoint:
    x: int
    y: float  # mean final regret / sqrt(T)
    stderr: float
    runs: int


AXES = ("M", "K")


def default_generator(axis: str, preset: ScalingPreset) -> Callable[[np.random.Generator, int], Environment]:
    if axis == "M":
        return lambda rng, M: flip_instance(rng, preset.K_for_M_axis, M, preset.segment_length, preset.spread)
    if axis == "K":
        return lambda rng, K: random_instance(rng, K, preset.M_for_K_axis, preset.T_for_K_axis, preset.spread)
    raise ValueError(f"axis must be one of {AXES}, got {axis!r}")


def scaling_study(axis: str, grid: Sequence[int], preset: ScalingPreset = DESK_SCALE,
                  master_seed: int = 0, parallelism: int = 1, generator=None,
                  instances: int | None = None, runs: int | None = None) -> list[ScalingPoint]:
    """Scaled final regret of M-UCB for each grid value.

    For each value, ``instances`` environments are drawn and M-UCB is run
    ``runs`` times on each; y averages final regret / sqrt(T) over all runs.
    Instance ``i`` uses the same seeds at every grid value (common random
    numbers), so the curve's shape is estimated with much less noise than its
    level.
    """
    gen = default_generator(axis, preset) if generator is None else generator
    instances = preset.instances if instances is None else instances
    runs = preset.runs if runs is None else runs
    axis_code = AXES.index(axis)
    points = []
    for x in grid:
        scaled = []
        for i in range(instances):
            ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(axis_code, i))
            inst_ss, run_ss = ss.spawn(2)
            env = gen(np.random.default_rng(inst_ss), int(x))
            run_seed = int(run_ss.generate_state(2, np.uint64)[0] >> np.uint64(1))
            res = monte_carlo(env, preset.mucb_spec(env), runs, run_seed, parallelism)
            scaled.append(res.finals / math.sqrt(env.T))
        ys = np.concatenate(scaled)
        se = float(ys.std(ddof=1) / math.sqrt(ys.size)) if ys.size > 1 else 0.0
        points.append(ScalingPoint(x=int(x), y=float(ys.mean()), stderr=se, runs=int(ys.size)))
    return points


# -- power-law fit -------------------------------------------------------------

EXPONENT_GRID = np.round(0.1 + 0.005 * np.arange(281), 10)  # 0.100, 0.105, ..., 1.500


@dataclass(frozen=True)
class PowerLawFit:
    c: float
    a: float
    b: float
    sse: float

    def predict(self, x):
        return self.c + self.a * np.power(np.asarray(x, dtype=float), self.b)


def fit_power_law(points, exponents: np.ndarray = EXPONENT_GRID) -> PowerLawFit:
    """Least-squares fit of ``y = c + a x^b`` by exhaustive search over ``b``.

    ``points`` holds ScalingPoints or ``(x, y)`` pairs. For each ``b`` the
    linear coefficients come from ordinary least squares; the grid value with
    the smallest residual sum of squares wins (earliest on ties).
    """
    xs, ys = [], []
    for p in points:
        x, y = (p.x, p.y) if isinstance(p, ScalingPoint) else p
        xs.append(float(x))
        ys.append(float(y))
    x = np.array(xs)
    y = np.array(ys)
    if x.size < 3:
        raise ValueError(f"need at least 3 points to fit, got {x.size}")
    if np.unique(x).size != x.size:
        raise ValueError("x values must be distinct")
    if np.any(x <= 0):
        raise ValueError("x values must be positive")
    best = None
    for b in exponents:
        design = np.column_stack([np.ones_like(x), x ** b])
        (c, a), *_ = np.linalg.lstsq(design, y, rcond=None)
        sse = float(np.sum((y - c - a * x ** b) ** 2))
        if best is None or sse < best.sse:
            best = PowerLawFit(c=float(c), a=float(a), b=float(b), sse=sse)
    return best

