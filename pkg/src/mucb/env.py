"""Piecewise-stationary bandit instances, reward sampling and regret accounting.

Arms and time steps are 1-indexed at every public interface. Internally the
segment means are a dense ``(M, K)`` array and arm ``k`` lives in column
``k - 1``.
"""

from __future__ import annotations

import csv
import enum
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class RewardFamily(str, enum.Enum):
    BERNOULLI = "bernoulli"
    GAUSSIAN = "gaussian"  # mean mu, std ``scale``, clipped to [0, 1]
    UNIFORM = "uniform"  # uniform on [mu - scale, mu + scale], clipped to [0, 1]

    @classmethod
    def parse(cls, value: "RewardFamily | str") -> "RewardFamily":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            valid = ", ".join(f.value for f in cls)
            raise ValueError(f"unknown reward family {value!r}; expected one of {valid}") from None


FAMILY_CODES = {RewardFamily.BERNOULLI: 0, RewardFamily.GAUSSIAN: 1, RewardFamily.UNIFORM: 2}


@dataclass(frozen=True, eq=False)
class Environment:
    """An immutable piecewise-stationary bandit instance.

    ``change_points`` holds the interior boundaries ``nu_1 < ... < nu_{M-1}``;
    segment ``i`` (1-indexed) covers steps ``nu_{i-1} + 1 .. nu_i`` with
    ``nu_0 = 0`` and ``nu_M = T``.
    """

    K: int
    T: int
    change_points: tuple[int, ...]
    segment_means: np.ndarray
    family: RewardFamily = RewardFamily.BERNOULLI
    scale: float = 0.1
    _ends: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        means = np.array(self.segment_means, dtype=np.float64)
        if means.ndim != 2 or means.shape[1] != self.K:
            raise ValueError(f"segment_means must have shape (M, {self.K}), got {means.shape}")
        if means.shape[0] != len(self.change_points) + 1:
            raise ValueError("need exactly one mean vector per segment")
        if not np.all((means >= 0.0) & (means <= 1.0)):
            raise ValueError("every mean must lie in [0, 1]")
        for i in range(1, means.shape[0]):
            if np.array_equal(means[i], means[i - 1]):
                raise ValueError(f"segments {i} and {i + 1} have identical means; merge them")
        prev = 0
        for nu in self.change_points:
            if nu <= prev:
                raise ValueError("change points must be strictly increasing and positive")
            prev = nu
        if prev >= self.T:
            raise ValueError("change points must lie strictly inside (0, T)")
        if self.scale < 0:
            raise ValueError("scale must be non-negative")
        means.setflags(write=False)
        object.__setattr__(self, "segment_means", means)
        object.__setattr__(self, "family", RewardFamily.parse(self.family))
        object.__setattr__(self, "_ends", tuple(self.change_points) + (self.T,))

    @property
    def M(self) -> int:
        return len(self.change_points) + 1

    @property
    def boundaries(self) -> tuple[int, ...]:
        """``(nu_0, nu_1, ..., nu_M)``."""
        return (0,) + self._ends

    @property
    def segment_lengths(self) -> tuple[int, ...]:
        b = self.boundaries
        return tuple(b[i + 1] - b[i] for i in range(self.M))

    def segment_of(self, t: int) -> int:
        """1-indexed segment containing step ``t``."""
        if not 1 <= t <= self.T:
            raise ValueError(f"t={t} outside 1..{self.T}")
        return bisect_left(self._ends, t) + 1

    def means_at(self, t: int) -> np.ndarray:
        return self.segment_means[self.segment_of(t) - 1]

    def step_segments(self) -> np.ndarray:
        """0-based segment index for each step 1..T, as an array of length T."""
        return np.repeat(np.arange(self.M), self.segment_lengths)

    def best_means(self) -> np.ndarray:
        """Per-step optimal expected reward, length T."""
        return self.segment_means.max(axis=1)[self.step_segments()]

    def with_family(self, family, scale: float | None = None) -> "Environment":
        return Environment(self.K, self.T, self.change_points, self.segment_means,
                           family, self.scale if scale is None else scale)


def make_piecewise_env(K: int, segment_lengths: Sequence[int], segment_means,
                       reward_family="bernoulli", scale: float = 0.1) -> Environment:
    """Build an environment from consecutive segment lengths and mean vectors."""
    if K < 1:
        raise ValueError("K must be a positive integer")
    lengths = [int(n) for n in segment_lengths]
    if not lengths:
        raise ValueError("need at least one segment")
    if any(n <= 0 for n in lengths):
        raise ValueError("segment lengths must be positive")
    ends = np.cumsum(lengths).tolist()
    return Environment(K=K, T=ends[-1], change_points=tuple(ends[:-1]),
                       segment_means=np.asarray(segment_means, dtype=np.float64),
                       family=reward_family, scale=scale)


def reward_from_noise(family: RewardFamily, mu: float, noise: float, scale: float) -> float:
    """Map one raw draw to a reward in [0, 1].

    Bernoulli and uniform families consume a U(0,1) draw, the gaussian family a
    standard normal draw.
    """
    if family is RewardFamily.BERNOULLI:
        return 1.0 if noise < mu else 0.0
    if family is RewardFamily.GAUSSIAN:
        x = mu + scale * noise
    else:
        x = mu + scale * (2.0 * noise - 1.0)
    return min(1.0, max(0.0, x))


def draw_noise(family: RewardFamily, rng: np.random.Generator, size=None):
    if family is RewardFamily.GAUSSIAN:
        return rng.standard_normal(size)
    return rng.random(size)


def sample_reward(env: Environment, arm: int, t: int, rng: np.random.Generator) -> float:
    """Draw the reward of ``arm`` at step ``t``; consumes exactly one draw from ``rng``."""
    if not 1 <= arm <= env.K:
        raise ValueError(f"arm={arm} outside 1..{env.K}")
    mu = float(env.means_at(t)[arm - 1])
    return reward_from_noise(env.family, mu, float(draw_noise(env.family, rng)), env.scale)


def pseudo_regret(env: Environment, actions) -> np.ndarray:
    """Cumulative expected regret of an action sequence, computed on the true means."""
    a = np.asarray(actions, dtype=np.int64)
    if a.shape != (env.T,):
        raise ValueError(f"expected {env.T} actions, got shape {a.shape}")
    if a.size and (a.min() < 1 or a.max() > env.K):
        raise ValueError(f"actions must be arm indices in 1..{env.K}")
    seg = env.step_segments()
    means = env.segment_means
    gaps = means.max(axis=1)[seg] - means[seg, a - 1]
    return np.cumsum(gaps)


@dataclass(frozen=True)
class GapProfile:
    suboptimal_gaps: np.ndarray  # (M, K)
    change_amplitudes: np.ndarray  # (M-1, K)

    @property
    def max_amplitudes(self) -> np.ndarray:
        if self.change_amplitudes.shape[0] == 0:
            return np.zeros(0)
        return self.change_amplitudes.max(axis=1)

    @property
    def min_max_amplitude(self) -> float:
        """Smallest per-change maximal amplitude; ``inf`` when there is no change."""
        amp = self.max_amplitudes
        return float(amp.min()) if amp.size else math.inf


def gap_profile(env: Environment) -> GapProfile:
    mu = env.segment_means
    gaps = mu.max(axis=1, keepdims=True) - mu
    amps = np.abs(np.diff(mu, axis=0))
    return GapProfile(suboptimal_gaps=gaps, change_amplitudes=amps)


@dataclass
class EpisodeTrace:
    actions: np.ndarray  # 1-indexed arms, length T
    rewards: np.ndarray
    restarts: tuple[int, ...]
    pseudo_regret: np.ndarray

    @property
    def final_regret(self) -> float:
        return float(self.pseudo_regret[-1]) if self.pseudo_regret.size else 0.0

    def same_as(self, other: "EpisodeTrace") -> bool:
        return (np.array_equal(self.actions, other.actions)
                and np.array_equal(self.rewards, other.rewards)
                and self.restarts == other.restarts
                and np.array_equal(self.pseudo_regret, other.pseudo_regret))


# -- seeding ---------------------------------------------------------------

def replication_seed(master_seed: int, replication: int) -> np.random.SeedSequence:
    """Independent seed for replication ``r``.

    Mixing is numpy's SeedSequence hash of ``(master_seed, spawn_key=(r,))``, so
    replication streams do not depend on how many replications are run.
    """
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(replication),))


def episode_streams(seed) -> tuple[np.random.Generator, np.random.Generator]:
    """(reward-noise stream, policy-randomisation stream) for one episode."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    noise_ss, policy_ss = seed.spawn(2)
    return np.random.Generator(np.random.PCG64(noise_ss)), np.random.Generator(np.random.PCG64(policy_ss))


# -- CSV ------------------------------------------------------------------

def load_env_csv(path, reward_family="bernoulli", scale: float = 0.1) -> Environment:
    """Read ``segment_index,length,mu_1,...,mu_K`` rows (with header)."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if header[:2] != ["segment_index", "length"] or len(header) < 3:
            raise ValueError(f"{path}: header must be segment_index,length,mu_1,...,mu_K")
        K = len(header) - 2
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != K + 2:
                raise ValueError(f"{path}:{lineno}: expected {K + 2} columns, got {len(row)}")
            try:
                rows.append((int(row[0]), int(row[1]), [float(v) for v in row[2:]]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no segments")
    rows.sort(key=lambda r: r[0])
    return make_piecewise_env(K, [r[1] for r in rows], [r[2] for r in rows], reward_family, scale)


def save_env_csv(env: Environment, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["segment_index", "length"] + [f"mu_{k}" for k in range(1, env.K + 1)])
        for i, (n, mu) in enumerate(zip(env.segment_lengths, env.segment_means), start=1):
            writer.writerow([i, n] + [repr(float(m)) for m in mu])
