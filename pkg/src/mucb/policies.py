"""M-UCB and baseline bandit policies.

Every policy exposes ``select(t) -> arm`` and ``update(t, arm, reward) -> bool``
(True when the policy restarted itself at ``t``) with 1-indexed arms, plus
``reset()``. Arithmetic is written with scalar ``math`` calls in a fixed order
so the compiled episode kernels in :mod:`mucb.kernels` reproduce it bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .detect import ChangeDetector, DetectorParams, Outcome

POLICY_NAMES = ("m_ucb", "ucb1", "d_ucb", "sw_ucb", "exp3", "exp3s")

_DUCB_RECOMPUTE_EVERY = 10_000


def schedule_period(K: int, gamma: float) -> int:
    """floor(K / gamma), the length of one uniform-exploration cycle; 0 means no cycle."""
    if gamma == 0:
        return 0
    return math.floor(K / gamma)


def _argmax_first(values: Sequence[float]) -> int:
    best = 0
    for k in range(1, len(values)):
        if values[k] > values[best]:
            best = k
    return best


class Policy:
    name = "policy"

    def reset(self) -> None:
        raise NotImplementedError

    def select(self, t: int) -> int:
        raise NotImplementedError

    def update(self, t: int, arm: int, reward: float) -> bool:
        raise NotImplementedError


def _check_reward(reward: float) -> None:
    if not 0.0 <= reward <= 1.0:
        raise ValueError(f"reward {reward!r} outside [0, 1]")


class _ScheduledUCB(Policy):
    """UCB1 indices since the last restart, interleaved with round-robin pulls.

    With offset ``A = (t - tau) mod P`` and ``P = floor(K / gamma)``, offsets
    ``1..K`` pull arm ``A``; every other offset (0 included) takes the UCB
    branch. ``gamma = 0`` leaves only the initial ``K`` round-robin pulls.
    """

    def __init__(self, K: int, gamma: float, detector_params: DetectorParams | None):
        self.K = K
        self.gamma = gamma
        self.period = schedule_period(K, gamma)
        if gamma and self.period < K + 1:
            raise ValueError(
                f"floor(K/gamma) = {self.period} < K + 1 = {K + 1}: the UCB branch would never run; "
                f"use gamma < {K / (K + 1):.4g}")
        self.detector_params = detector_params
        self.reset()

    def reset(self) -> None:
        self.tau = 0
        self.counts = [0] * self.K
        self.sums = [0.0] * self.K
        self.detectors = ([ChangeDetector(self.detector_params) for _ in range(self.K)]
                          if self.detector_params is not None else None)
        self.restarts: list[int] = []

    def _restart(self, t: int) -> None:
        self.tau = t
        for k in range(self.K):
            self.counts[k] = 0
            self.sums[k] = 0.0
        for d in self.detectors:
            d.reset()
        self.restarts.append(t)

    def ucb_indices(self, t: int) -> list[float]:
        log_s = math.log(t - self.tau)
        return [self.sums[k] / self.counts[k] + math.sqrt(2.0 * log_s / self.counts[k])
                for k in range(self.K)]

    def select(self, t: int) -> int:
        s = t - self.tau
        offset = s % self.period if self.period else s
        if 1 <= offset <= self.K:
            return offset
        for k in range(self.K):
            if self.counts[k] == 0:
                return k + 1
        return _argmax_first(self.ucb_indices(t)) + 1

    def update(self, t: int, arm: int, reward: float) -> bool:
        _check_reward(reward)
        k = arm - 1
        self.counts[k] += 1
        self.sums[k] += reward
        if self.detectors is not None and self.detectors[k].push(reward) is Outcome.ALARM:
            self._restart(t)
            return True
        return False


class MUCB(_ScheduledUCB):
    """Scheduled UCB whose per-arm detectors trigger a full restart on alarm.

    ``b = inf`` disables detection, leaving UCB1 with forced exploration.
    """

    name = "m_ucb"

    def __init__(self, K: int, w: int, b: float, gamma: float):
        if not 0.0 < gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
        self.w, self.b = int(w), float(b)
        params = DetectorParams(self.w, self.b)
        super().__init__(K, gamma, params if math.isfinite(self.b) else None)

    @property
    def L(self) -> int:
        return self.w * math.ceil(self.K / self.gamma)


class UCB1(_ScheduledUCB):
    """Never-restarting UCB1; ``gamma > 0`` keeps M-UCB's forced exploration."""

    name = "ucb1"

    def __init__(self, K: int, gamma: float = 0.0):
        if not 0.0 <= gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
        super().__init__(K, gamma, None)


class DUCB(Policy):
    """Discounted UCB.

    After each step every arm's discounted count and reward sum are multiplied
    by ``discount`` and the pulled arm's observation is added. The index at
    step ``t`` is ``S_k/N_k + sqrt(4 xi log(n_t) / N_k)`` (that is
    ``2 sqrt(xi log n_t / N_k)``), where ``n_t = 1 + discount * sum_k N_k`` is
    the discounted step count, equal to ``t`` when ``discount = 1``.
    """

    name = "d_ucb"

    def __init__(self, K: int, discount: float, xi: float = 0.5):
        if not 0.0 < discount <= 1.0:
            raise ValueError(f"discount must lie in (0, 1], got {discount}")
        if xi <= 0:
            raise ValueError("xi must be positive")
        self.K, self.discount, self.xi = K, discount, xi
        self.reset()

    def reset(self) -> None:
        self.counts = [0.0] * self.K
        self.sums = [0.0] * self.K
        self._actions: list[int] = []
        self._rewards: list[float] = []

    def ucb_indices(self, t: int) -> list[float]:
        total = 0.0
        for k in range(self.K):
            total += self.counts[k]
        log_n = math.log(1.0 + self.discount * total)
        c = 4.0 * self.xi
        return [self.sums[k] / self.counts[k] + math.sqrt(c * log_n / self.counts[k])
                for k in range(self.K)]

    def select(self, t: int) -> int:
        for k in range(self.K):
            if self.counts[k] == 0.0:
                return k + 1
        return _argmax_first(self.ucb_indices(t)) + 1

    def update(self, t: int, arm: int, reward: float) -> bool:
        _check_reward(reward)
        g = self.discount
        self._actions.append(arm)
        self._rewards.append(reward)
        if t % _DUCB_RECOMPUTE_EVERY == 0:
            self.counts, self.sums = ducb_statistics(self._actions, self._rewards, self.K, g)
            return False
        for k in range(self.K):
            self.counts[k] *= g
            self.sums[k] *= g
        self.counts[arm - 1] += 1.0
        self.sums[arm - 1] += reward
        return False


def ducb_statistics(actions: Sequence[int], rewards: Sequence[float], K: int,
                    discount: float) -> tuple[list[float], list[float]]:
    """Direct evaluation of discounted counts and sums after ``len(actions)`` steps."""
    t = len(actions)
    counts = [0.0] * K
    sums = [0.0] * K
    for s in range(t):
        weight = math.pow(discount, t - 1 - s)
        counts[actions[s] - 1] += weight
        sums[actions[s] - 1] += weight * rewards[s]
    return counts, sums


class SWUCB(Policy):
    """Sliding-window UCB over the last ``window`` steps.

    Index ``S_k/N_k + sqrt(xi log(min(t, window)) / N_k)``; an arm absent from
    the window is pulled first.
    """

    name = "sw_ucb"

    def __init__(self, K: int, window: int, xi: float = 0.5):
        if window < 1:
            raise ValueError("window must be >= 1")
        if xi <= 0:
            raise ValueError("xi must be positive")
        self.K, self.window, self.xi = K, int(window), xi
        self.reset()

    def reset(self) -> None:
        self.counts = [0] * self.K
        self.sums = [0.0] * self.K
        self._arms = [0] * self.window
        self._rewards = [0.0] * self.window
        self._n = 0

    def ucb_indices(self, t: int) -> list[float]:
        log_n = math.log(min(t, self.window))
        return [self.sums[k] / self.counts[k] + math.sqrt(self.xi * log_n / self.counts[k])
                for k in range(self.K)]

    def select(self, t: int) -> int:
        for k in range(self.K):
            if self.counts[k] == 0:
                return k + 1
        return _argmax_first(self.ucb_indices(t)) + 1

    def update(self, t: int, arm: int, reward: float) -> bool:
        _check_reward(reward)
        pos = self._n % self.window
        if self._n >= self.window:
            old = self._arms[pos] - 1
            self.counts[old] -= 1
            self.sums[old] -= self._rewards[pos]
        self._arms[pos] = arm
        self._rewards[pos] = reward
        self.counts[arm - 1] += 1
        self.sums[arm - 1] += reward
        self._n += 1
        if self._n % self.window == 0:
            # re-anchor: the buffer now starts at position 0 in time order
            self.sums = [0.0] * self.K
            for i in range(self.window):
                self.sums[self._arms[i] - 1] += self._rewards[i]
        return False


# -- exponential weights ----------------------------------------------------

def exp3_probs(weights: Sequence[float], gamma: float) -> np.ndarray:
    """Mixed distribution ``(1 - gamma) w / sum(w) + gamma / K``."""
    K = len(weights)
    total = 0.0
    for x in weights:
        total += x
    if not total > 0:
        raise ValueError("weights must be positive")
    return np.array([(1.0 - gamma) * (weights[k] / total) + gamma / K for k in range(K)])


def exp3_update(weights, arm: int, reward: float, probs, gamma: float) -> np.ndarray:
    """Multiply the played arm's weight by ``exp(gamma * (reward / p_arm) / K)``; renormalised."""
    return exp3s_update(weights, arm, reward, probs, gamma, 0.0)


def exp3s_update(weights, arm: int, reward: float, probs, gamma: float, alpha: float) -> np.ndarray:
    """Exponential step plus the ``(e alpha / K) sum(w)`` share for every arm; renormalised."""
    _check_reward(reward)
    K = len(weights)
    p = probs[arm - 1]
    if not p > 0:
        raise ValueError("played arm has zero probability")
    old_total = 0.0
    for x in weights:
        old_total += x
    share = math.e * alpha / K * old_total
    new = [float(x) for x in weights]
    new[arm - 1] = new[arm - 1] * math.exp(gamma * (reward / p) / K)
    for k in range(K):
        new[k] += share
    total = 0.0
    for x in new:
        total += x
    return np.array([x / total for x in new])


def sample_from(probs: Sequence[float], u: float) -> int:
    """Inverse-CDF draw of a 1-indexed arm from one uniform ``u``."""
    acc = 0.0
    K = len(probs)
    for k in range(K - 1):
        acc += probs[k]
        if u < acc:
            return k + 1
    return K


class EXP3(Policy):
    name = "exp3"

    def __init__(self, K: int, gamma: float, rng: np.random.Generator, alpha: float = 0.0):
        if not 0.0 < gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
        if alpha < 0:
            raise ValueError("alpha must be non-negative")
        self.K, self.gamma, self.alpha, self.rng = K, gamma, alpha, rng
        self.reset()

    def reset(self) -> None:
        self.weights = np.full(self.K, 1.0 / self.K)
        self._probs = None

    def select(self, t: int) -> int:
        self._probs = exp3_probs(self.weights, self.gamma)
        return sample_from(self._probs, float(self.rng.random()))

    def update(self, t: int, arm: int, reward: float) -> bool:
        self.weights = exp3s_update(self.weights, arm, reward, self._probs, self.gamma, self.alpha)
        return False


class EXP3S(EXP3):
    name = "exp3s"

    def __init__(self, K: int, gamma: float, alpha: float, rng: np.random.Generator):
        super().__init__(K, gamma, rng, alpha)


# -- parameter rules ----------------------------------------------------------

def ducb_defaults(T: int, M: int) -> dict:
    """discount = 1 - 0.25 sqrt((M-1)/T), xi = 0.5."""
    return {"discount": 1.0 - 0.25 * math.sqrt((M - 1) / T), "xi": 0.5}


def swucb_defaults(T: int, M: int) -> dict:
    """window = 2 sqrt(T log T / (M-1)) rounded up; the full horizon when M = 1."""
    if M <= 1:
        return {"window": T, "xi": 0.5}
    return {"window": min(T, math.ceil(2.0 * math.sqrt(T * math.log(T) / (M - 1)))), "xi": 0.5}


def exp3_defaults(K: int, T: int) -> dict:
    """gamma = min(1, sqrt(K ln K / ((e - 1) g))) with the gain bound g = T."""
    if K == 1:
        return {"gamma": 1.0}
    return {"gamma": min(1.0, math.sqrt(K * math.log(K) / ((math.e - 1.0) * T)))}


def exp3s_defaults(K: int, T: int, M: int) -> dict:
    """alpha = 1/T, gamma = min(1, sqrt(K (S ln(KT) + e) / ((e - 1) T))) with hardness S = M."""
    S = M
    return {"alpha": 1.0 / T,
            "gamma": min(1.0, math.sqrt(K * (S * math.log(K * T) + math.e) / ((math.e - 1.0) * T)))}


@dataclass
class PolicySpec:
    """A policy name plus its constructor parameters."""

    name: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.name!r}; valid policies: {', '.join(POLICY_NAMES)}")

    @property
    def label(self) -> str:
        return self.params.get("label", self.name)


def default_params(name: str, K: int, T: int, M: int) -> dict:
    """Baseline parameter rules from the horizon and segment count."""
    if name == "d_ucb":
        return ducb_defaults(T, M)
    if name == "sw_ucb":
        return swucb_defaults(T, M)
    if name == "exp3":
        return exp3_defaults(K, T)
    if name == "exp3s":
        return exp3s_defaults(K, T, M)
    if name == "ucb1":
        return {"gamma": 0.0}
    raise ValueError(f"{name} has no default parameter rule; it needs w, b, gamma")


def make_policy(spec: PolicySpec, K: int, rng: np.random.Generator | None = None) -> Policy:
    p = {k: v for k, v in spec.params.items() if k != "label"}
    try:
        if spec.name == "m_ucb":
            return MUCB(K, int(p["w"]), float(p["b"]), float(p["gamma"]))
        if spec.name == "ucb1":
            return UCB1(K, float(p.get("gamma", 0.0)))
        if spec.name == "d_ucb":
            return DUCB(K, float(p["discount"]), float(p.get("xi", 0.5)))
        if spec.name == "sw_ucb":
            return SWUCB(K, int(p["window"]), float(p.get("xi", 0.5)))
        if rng is None:
            raise ValueError(f"{spec.name} needs a random generator")
        if spec.name == "exp3":
            return EXP3(K, float(p["gamma"]), rng)
        return EXP3S(K, float(p["gamma"]), float(p["alpha"]), rng)
    except KeyError as exc:
        raise ValueError(f"policy {spec.name} is missing parameter {exc.args[0]!r}") from None
