"""Parameter selection for M-UCB, feasibility checks and the regret bound.

All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .detect import calibrate_threshold
from .env import Environment, GapProfile, gap_profile


class TuningError(ValueError):
    """The requested inputs do not admit a valid parameter."""


GAMMA_VARIANTS = ("capped", "empirical")


@dataclass(frozen=True)
class TuningInputs:
    T: int
    K: int
    M: int
    delta: float

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise TuningError(f"delta must lie in (0, 1], got {self.delta}")
        if self.M < 1:
            raise TuningError("M must be >= 1")
        if self.K < 1:
            raise TuningError("K must be >= 1")
        if self.T <= self.K:
            raise TuningError(f"T={self.T} must exceed K={self.K}")


@dataclass(frozen=True)
class TunedParams:
    w: int
    b: float
    gamma: float
    L: int
    gamma_variant: str = "capped"
    inputs: TuningInputs | None = None
    alternatives: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.inputs is None:
            d.pop("inputs")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TunedParams":
        inputs = d.get("inputs")
        return cls(w=int(d["w"]), b=float(d["b"]), gamma=float(d["gamma"]), L=int(d["L"]),
                   gamma_variant=d.get("gamma_variant", "capped"),
                   inputs=TuningInputs(**inputs) if inputs else None,
                   alternatives=dict(d.get("alternatives", {})))


def window_length_formula(delta: float, K: int, T: int) -> float:
    """(4 / delta^2) (sqrt(log(2 K T^2)) + sqrt(log(2 T)))^2, before rounding."""
    if not delta > 0:
        raise TuningError(f"delta must be positive, got {delta}")
    if K < 1 or T < 1:
        raise TuningError("K and T must be positive")
    root = math.sqrt(math.log(2 * K * T * T)) + math.sqrt(math.log(2 * T))
    return 4.0 / (delta * delta) * root * root


def tune_w(delta: float, K: int, T: int) -> int:
    """Window length large enough to detect changes of size ``delta``, rounded up to even."""
    w = math.ceil(window_length_formula(delta, K, T))
    w += w % 2
    return max(2, w)


def detection_cost(w: int, b: float, delta: float) -> float:
    """min(w/2, ceil(b/delta) + 3 sqrt(w))."""
    return min(w / 2, math.ceil(b / delta) + 3.0 * math.sqrt(w))


def tune_gamma(w: int, b: float, delta: float, M: int, K: int, T: int,
               variant: str = "capped") -> float:
    """Uniform-exploration fraction.

    ``capped``: sqrt((M-1) K min(w/2, ceil(b/delta) + 3 sqrt(w)) / (2T)).
    ``empirical``: sqrt((M-1) K (2b + 3 sqrt(w)) / (2T)).
    """
    if variant == "capped":
        if not delta > 0:
            raise TuningError(f"delta must be positive, got {delta}")
        cost = detection_cost(w, b, delta)
    elif variant == "empirical":
        cost = 2.0 * b + 3.0 * math.sqrt(w)
    else:
        raise TuningError(f"unknown gamma variant {variant!r}; expected one of {GAMMA_VARIANTS}")
    if M < 2:
        raise TuningError(
            "M = 1 gives gamma = 0: no change points to detect. Choose a small floor value "
            "for gamma explicitly (for example 0.05) if forced exploration is still wanted.")
    gamma = math.sqrt((M - 1) * K * cost / (2.0 * T))
    if gamma > 1.0:
        raise TuningError(
            f"gamma = {gamma:.4g} exceeds 1 ({variant}): the exploration budget covers the whole "
            "horizon; increase T or delta, or decrease w")
    return gamma


def tune(T: int, K: int, M: int, delta: float, variant: str = "capped",
         w: int | None = None) -> TunedParams:
    """w, b and gamma from prior knowledge of the horizon, arm count, segment count and change size.

    Both gamma variants are computed; the one not selected is kept in
    ``alternatives`` (or the reason it is unavailable).
    """
    inputs = TuningInputs(T=T, K=K, M=M, delta=delta)
    w = tune_w(delta, K, T) if w is None else int(w)
    b = calibrate_threshold(w, K, T)
    gammas: dict[str, object] = {}
    for v in GAMMA_VARIANTS:
        try:
            gammas[v] = tune_gamma(w, b, delta, M, K, T, v)
        except TuningError as exc:
            gammas[v] = str(exc)
    chosen = gammas[variant]
    if isinstance(chosen, str):
        raise TuningError(chosen)
    alt = {f"gamma_{v}": g for v, g in gammas.items() if v != variant}
    return TunedParams(w=w, b=b, gamma=chosen, L=w * math.ceil(K / chosen),
                       gamma_variant=variant, inputs=inputs, alternatives=alt)


# -- feasibility --------------------------------------------------------------

def amplitude_threshold(w: int, K: int, T: int) -> float:
    """Smallest per-change maximal amplitude the analysis assumes detectable."""
    return 2.0 * math.sqrt(math.log(2 * K * T * T) / w) + 2.0 * math.sqrt(math.log(2 * T) / w)


@dataclass
class FeasibilityReport:
    w: int
    gamma: float
    L: int
    amplitude_threshold: float
    segment_lengths: list[int]
    segment_ok: list[bool]
    max_amplitudes: list[float]
    amplitude_ok: list[bool]
    count_ok: bool  # M < floor(T / L)

    @property
    def segments_pass(self) -> bool:
        return all(self.segment_ok)

    @property
    def amplitudes_pass(self) -> bool:
        return all(self.amplitude_ok)

    @property
    def passed(self) -> bool:
        return self.segments_pass and self.amplitudes_pass

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(segments_pass=self.segments_pass, amplitudes_pass=self.amplitudes_pass,
                 passed=self.passed)
        return d

    def format(self) -> str:
        lines = [f"Feasibility report (w={self.w}, gamma={self.gamma:.6g}, L={self.L})",
                 f"  (a) every segment longer than L: {'pass' if self.segments_pass else 'FAIL'}"]
        for i, (n, ok) in enumerate(zip(self.segment_lengths, self.segment_ok), start=1):
            lines.append(f"      segment {i}: length {n} {'>' if ok else '<='} {self.L}")
        lines.append(f"      M < floor(T/L): {'yes' if self.count_ok else 'no'}")
        lines.append(f"  (b) change amplitude >= {self.amplitude_threshold:.4f}: "
                     f"{'pass' if self.amplitudes_pass else 'FAIL'}")
        for i, (a, ok) in enumerate(zip(self.max_amplitudes, self.amplitude_ok), start=1):
            lines.append(f"      change {i}: max amplitude {a:.4f} {'ok' if ok else 'too small'}")
        lines.append(f"  overall: {'pass' if self.passed else 'FAIL'} (advisory; the policy runs regardless)")
        return "\n".join(lines)


def check_feasibility(env: Environment, w: int, gamma: float) -> FeasibilityReport:
    L = w * math.ceil(env.K / gamma)
    thr = amplitude_threshold(w, env.K, env.T)
    amps = gap_profile(env).max_amplitudes.tolist()
    lengths = list(env.segment_lengths)
    return FeasibilityReport(
        w=w, gamma=gamma, L=L, amplitude_threshold=thr,
        segment_lengths=lengths, segment_ok=[n > L for n in lengths],
        max_amplitudes=amps, amplitude_ok=[a >= thr for a in amps],
        count_ok=env.M < env.T // L)


# -- regret bound ------------------------------------------------------------

@dataclass(frozen=True)
class RegretBound:
    ucb_terms: float  # sum of per-segment UCB constants
    uniform_exploration: float  # gamma T
    detection_delay: float
    bad_events: float  # 3M

    @property
    def total(self) -> float:
        return self.ucb_terms + self.uniform_exploration + self.detection_delay + self.bad_events


def segment_constant(gaps: np.ndarray, T: int) -> float:
    """8 sum_{gap>0} log T / gap + (1 + pi^2/3 + K) sum gaps, for one segment."""
    K = gaps.shape[0]
    pos = gaps[gaps > 0]
    return 8.0 * float(np.sum(math.log(T) / pos)) + (1.0 + math.pi ** 2 / 3.0 + K) * float(np.sum(gaps))


def regret_bound(env: Environment, w: int, b: float, gamma: float,
                   profile: GapProfile | None = None) -> RegretBound:
    if not 0.0 < gamma <= 1.0:
        raise TuningError("gamma must lie in (0, 1]")
    profile = gap_profile(env) if profile is None else profile
    K, T = env.K, env.T
    ucb = sum(segment_constant(g, T) for g in profile.suboptimal_gaps)
    delay = sum(2.0 * K * detection_cost(w, b, float(d)) / gamma for d in profile.max_amplitudes)
    return RegretBound(ucb_terms=ucb, uniform_exploration=gamma * T,
                       detection_delay=delay, bad_events=3.0 * env.M)


# -- detection lemmas ------------------------------------------------------

def detection_margin(w: int, T: int) -> float:
    """c = 2 sqrt(log(2T) / w)."""
    return 2.0 * math.sqrt(math.log(2 * T) / w)


def detection_probability_bound(w: int, c: float) -> float:
    """1 - 2 exp(-w c^2 / 4): lower bound on timely detection."""
    return 1.0 - 2.0 * math.exp(-w * c * c / 4.0)


def detection_delay_bound(w: int, b: float, delta: float, K: int, gamma: float, c: float) -> float:
    """min(L/2, (ceil(b/delta) + 3 sqrt(w)) ceil(K/gamma)) / (1 - 2 exp(-w c^2 / 4))."""
    cycle = math.ceil(K / gamma)
    L = w * cycle
    return min(L / 2, (math.ceil(b / delta) + 3.0 * math.sqrt(w)) * cycle) / detection_probability_bound(w, c)
