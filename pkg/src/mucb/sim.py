"""Seeded episode runner and Monte-Carlo aggregation.

Replication ``r`` of a run seeded with ``master_seed`` always uses
``replication_seed(master_seed, r)``; results are reduced in ascending
replication order, so aggregates do not depend on the number of workers.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from . import kernels
from .env import (FAMILY_CODES, Environment, EpisodeTrace, draw_noise, episode_streams,
                  pseudo_regret, replication_seed, sample_reward)
from .policies import EXP3, MUCB, UCB1, DUCB, SWUCB, Policy, PolicySpec, make_policy

ENGINES = ("auto", "numba", "python")


def play(env: Environment, policy: Policy, noise_rng: np.random.Generator) -> EpisodeTrace:
    """Run any select/update policy for ``env.T`` steps with lazily sampled rewards."""
    T = env.T
    actions = np.empty(T, np.int64)
    rewards = np.empty(T, np.float64)
    restarts = []
    for t in range(1, T + 1):
        arm = policy.select(t)
        x = sample_reward(env, arm, t, noise_rng)
        actions[t - 1] = arm
        rewards[t - 1] = x
        if policy.update(t, arm, x):
            restarts.append(t)
    return EpisodeTrace(actions, rewards, tuple(restarts), pseudo_regret(env, actions))


def _kernel_play(env: Environment, policy: Policy, noise_rng, policy_rng) -> EpisodeTrace:
    seg_ends = np.asarray(env.boundaries[1:], np.int64)
    means = np.ascontiguousarray(env.segment_means)
    fam = FAMILY_CODES[env.family]
    noise = np.asarray(draw_noise(env.family, noise_rng, env.T), np.float64)
    K = env.K
    if isinstance(policy, MUCB):
        use_cd = policy.detectors is not None
        out = kernels.scheduled_ucb_episode(seg_ends, means, fam, env.scale, noise, K,
                                            policy.w, policy.b if use_cd else math.inf,
                                            policy.period, use_cd)
    elif isinstance(policy, UCB1):
        out = kernels.scheduled_ucb_episode(seg_ends, means, fam, env.scale, noise, K,
                                            2, math.inf, policy.period, False)
    elif isinstance(policy, DUCB):
        out = kernels.ducb_episode(seg_ends, means, fam, env.scale, noise, K, policy.discount, policy.xi)
    elif isinstance(policy, SWUCB):
        out = kernels.swucb_episode(seg_ends, means, fam, env.scale, noise, K, policy.window, policy.xi)
    elif isinstance(policy, EXP3):
        u = policy_rng.random(env.T)
        out = kernels.exp3s_episode(seg_ends, means, fam, env.scale, noise, u, K, policy.gamma, policy.alpha)
    else:
        raise TypeError(f"no compiled kernel for {type(policy).__name__}")
    actions, rewards, flags = out
    restarts = tuple(int(t) for t in np.flatnonzero(flags) + 1)
    return EpisodeTrace(actions, rewards, restarts, pseudo_regret(env, actions))


def run_episode(env: Environment, spec: PolicySpec, seed, engine: str = "auto") -> EpisodeTrace:
    """One episode, a deterministic function of ``(env, spec, seed)``.

    ``seed`` is an int or a ``SeedSequence``. Both engines consume the same
    streams and produce identical traces.
    """
    if engine not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}")
    noise_rng, policy_rng = episode_streams(seed)
    policy = make_policy(spec, env.K, policy_rng)
    if engine == "python" or (engine == "auto" and not kernels.HAVE_NUMBA):
        return play(env, policy, noise_rng)
    return _kernel_play(env, policy, noise_rng, policy_rng)


def map_replications(env: Environment, spec: PolicySpec, reps: int, master_seed: int,
                     fn: Callable[[EpisodeTrace], object], parallelism: int = 1,
                     engine: str = "auto") -> Iterator:
    """Yield ``fn(trace)`` for replications ``0..reps-1`` in order."""
    if reps < 1:
        raise ValueError("reps must be >= 1")

    def one(r):
        return fn(run_episode(env, spec, replication_seed(master_seed, r), engine))

    if parallelism <= 1:
        for r in range(reps):
            yield one(r)
        return
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        yield from pool.map(one, range(reps))


@dataclass
class RunResult:
    label: str
    mean: np.ndarray
    stderr: np.ndarray
    finals: np.ndarray
    restart_histogram: np.ndarray  # replications restarting at each step
    restart_counts: np.ndarray  # restarts per replication
    wall_seconds: float
    reps: int
    extra: dict = field(default_factory=dict)

    @property
    def final_mean(self) -> float:
        return float(self.mean[-1])

    @property
    def final_stderr(self) -> float:
        return float(self.stderr[-1])


def monte_carlo(env: Environment, spec: PolicySpec, reps: int, master_seed: int = 0,
                parallelism: int = 1, engine: str = "auto") -> RunResult:
    """Mean and standard error of the pseudo-regret curve over ``reps`` replications."""
    start = time.perf_counter()
    T = env.T
    mean = np.zeros(T)
    m2 = np.zeros(T)
    hist = np.zeros(T, np.int64)
    finals = np.empty(reps)
    counts = np.empty(reps, np.int64)

    def summarize(tr: EpisodeTrace):
        return tr.pseudo_regret, tr.restarts

    for n, (curve, restarts) in enumerate(
            map_replications(env, spec, reps, master_seed, summarize, parallelism, engine), start=1):
        d = curve - mean
        mean += d / n
        m2 += d * (curve - mean)
        finals[n - 1] = curve[-1]
        counts[n - 1] = len(restarts)
        for t in restarts:
            hist[t - 1] += 1
    if reps > 1:
        stderr = np.sqrt(m2 / (reps - 1) / reps)
    else:
        stderr = np.zeros(T)
    return RunResult(label=spec.label, mean=mean, stderr=stderr, finals=finals,
                     restart_histogram=hist, restart_counts=counts,
                     wall_seconds=time.perf_counter() - start, reps=reps)
