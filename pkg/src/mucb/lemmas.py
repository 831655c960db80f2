"""Monte-Carlo checks of the false-alarm, detection and delay guarantees."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .detect import false_alarm_bound
from .env import Environment, gap_profile, make_piecewise_env
from .policies import PolicySpec, schedule_period
from .sim import map_replications
from .tuning import (detection_delay_bound, detection_margin, detection_probability_bound)


def _first_restart(trace) -> int:
    return trace.restarts[0] if trace.restarts else 0


@dataclass
class FalseAlarmResult:
    K: int
    T: int
    w: int
    b: float
    gamma: float
    reps: int
    alarms: int
    rate: float
    stderr: float
    bound: float

    def to_dict(self) -> dict:
        return asdict(self)


def false_alarm_experiment(K: int, T: int, w: int, b: float, gamma: float, reps: int,
                           means=None, master_seed: int = 0, parallelism: int = 1) -> FalseAlarmResult:
    """Fraction of stationary replications in which M-UCB restarts at least once.

    ``means`` defaults to 0.5 on every arm, the maximal-variance Bernoulli case.
    """
    means = np.full(K, 0.5) if means is None else np.asarray(means, dtype=float)
    env = make_piecewise_env(K, [T], [means])
    spec = PolicySpec("m_ucb", {"w": w, "b": b, "gamma": gamma})
    first = np.fromiter(map_replications(env, spec, reps, master_seed, _first_restart, parallelism),
                        dtype=np.int64, count=reps)
    alarms = int(np.count_nonzero(first))
    rate = alarms / reps
    return FalseAlarmResult(K=K, T=T, w=w, b=b, gamma=gamma, reps=reps, alarms=alarms, rate=rate,
                            stderr=math.sqrt(rate * (1 - rate) / reps),
                            bound=false_alarm_bound(w, b, K, T) if math.isfinite(b) else 0.0)


@dataclass
class DetectionResult:
    delta: float
    w: int
    b: float
    gamma: float
    L: int
    reps: int
    conditioned: int  # replications without a restart before the change
    successes: int
    success_rate: float
    success_stderr: float
    mean_delay: float
    delay_stderr: float
    max_delay: int
    probability_bound: float
    delay_bound: float
    premise_holds: bool  # delta >= 2b/w + c

    def to_dict(self) -> dict:
        return asdict(self)


def detection_experiment(env: Environment, w: int, b: float, gamma: float, reps: int,
                         master_seed: int = 0, parallelism: int = 1) -> DetectionResult:
    """Timely-detection rate and conditional delay for a single change point.

    A replication counts towards the rate when its first restart is after the
    change (or never happens); it succeeds when that restart lands within
    ``L/2`` steps of the change. NaN marks a statistic with an empty sample.
    """
    if env.M != 2:
        raise ValueError(f"detection_experiment needs exactly one change point, got M={env.M}")
    nu = env.change_points[0]
    K, T = env.K, env.T
    if schedule_period(K, gamma) < K + 1:
        raise ValueError("gamma too large for the exploration schedule")
    cycle = math.ceil(K / gamma)
    L = w * cycle
    spec = PolicySpec("m_ucb", {"w": w, "b": b, "gamma": gamma})
    first = np.fromiter(map_replications(env, spec, reps, master_seed, _first_restart, parallelism),
                        dtype=np.int64, count=reps)
    cond = (first == 0) | (first > nu)
    ok = cond & (first > nu) & (first <= nu + L / 2)
    n_cond = int(cond.sum())
    n_ok = int(ok.sum())
    delays = first[ok] - nu
    if n_cond:
        rate = n_ok / n_cond
        rate_se = math.sqrt(rate * (1 - rate) / n_cond)
    else:
        rate = rate_se = math.nan
    if n_ok:
        mean_delay = float(delays.mean())
        delay_se = float(delays.std(ddof=1) / math.sqrt(n_ok)) if n_ok > 1 else 0.0
        max_delay = int(delays.max())
    else:
        mean_delay = delay_se = math.nan
        max_delay = 0
    delta = float(gap_profile(env).max_amplitudes[0])
    c = detection_margin(w, T)
    return DetectionResult(
        delta=delta, w=w, b=b, gamma=gamma, L=L, reps=reps, conditioned=n_cond, successes=n_ok,
        success_rate=rate, success_stderr=rate_se, mean_delay=mean_delay, delay_stderr=delay_se,
        max_delay=max_delay, probability_bound=detection_probability_bound(w, c),
        delay_bound=detection_delay_bound(w, b, delta, K, gamma, c),
        premise_holds=delta >= 2 * b / w + c)
