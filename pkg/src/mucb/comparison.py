"""M-UCB against the baselines on one instance, each tuned by its own rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import Environment, gap_profile, make_piecewise_env
from .policies import PolicySpec, default_params
from .sim import RunResult, monte_carlo
from .tuning import TunedParams, tune

BASELINES = ("d_ucb", "sw_ucb", "exp3", "exp3s")


def level_shift_instance(K: int = 6, M: int = 9, segment_length: int = 4_800,
                         levels=(0.1, 0.9), lead: float = 0.1) -> Environment:
    """Every arm jumps between two levels at each change; the leader rotates.

    In segment ``i`` all arms sit near ``levels[i % 2]``, arm ``i % K + 1``
    ``lead`` above it and the rest ``lead`` below, so every arm changes by the
    same large amount at every change point.
    """
    means = np.empty((M, K))
    for i in range(M):
        level = levels[i % len(levels)]
        means[i] = level - lead
        means[i, i % K] = level + lead
    return make_piecewise_env(K, [segment_length] * M, np.clip(means, 0.0, 1.0))


@dataclass
class Comparison:
    tuned: TunedParams
    results: dict[str, RunResult]

    def ratio(self, baseline: str) -> float:
        """M-UCB mean final regret over the baseline's."""
        return self.results["m_ucb"].final_mean / self.results[baseline].final_mean

    def to_dict(self) -> dict:
        return {"tuned": self.tuned.to_dict(),
                "final_mean_regret": {k: r.final_mean for k, r in self.results.items()},
                "final_stderr": {k: r.final_stderr for k, r in self.results.items()},
                "ratio": {k: self.ratio(k) for k in self.results if k != "m_ucb"}}


def compare(env: Environment, reps: int = 100, master_seed: int = 0, parallelism: int = 1,
            variant: str = "capped", baselines=BASELINES) -> Comparison:
    """Run M-UCB and each baseline with common replication seeds.

    M-UCB is tuned with the smallest per-change maximal amplitude as its
    change-size prior; baselines use their horizon and segment-count rules.
    """
    delta = float(gap_profile(env).max_amplitudes.min())
    tp = tune(env.T, env.K, env.M, delta, variant)
    specs = [PolicySpec("m_ucb", {"w": tp.w, "b": tp.b, "gamma": tp.gamma})]
    specs += [PolicySpec(name, default_params(name, env.K, env.T, env.M)) for name in baselines]
    results = {s.name: monte_carlo(env, s, reps, master_seed, parallelism) for s in specs}
    return Comparison(tuned=tp, results=results)
