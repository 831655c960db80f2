"""Two-sample sliding-window mean-shift test and its streaming per-arm form."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

# Statistics closer than this to the threshold are re-evaluated from the buffer
# so streaming decisions match the batch test exactly.
_TIE_BAND = 1e-9


@dataclass(frozen=True)
class DetectorParams:
    w: int
    b: float

    def __post_init__(self):
        if int(self.w) != self.w or self.w < 2 or self.w % 2:
            raise ValueError(f"window length w must be an even integer >= 2, got {self.w}")
        if not self.b > 0:
            raise ValueError(f"threshold b must be positive, got {self.b}")


def half_sums(window: Sequence[float]) -> tuple[float, float]:
    """(first-half sum, second-half sum), accumulated left to right."""
    h = len(window) // 2
    s1 = 0.0
    for i in range(h):
        s1 += window[i]
    s2 = 0.0
    for i in range(h, len(window)):
        s2 += window[i]
    return s1, s2


def cd_statistic(window: Sequence[float]) -> float:
    s1, s2 = half_sums(window)
    return abs(s2 - s1)


def cd_test(params: DetectorParams, window: Sequence[float]) -> bool:
    """True iff |sum(second half) - sum(first half)| > b, strictly."""
    if len(window) != params.w:
        raise ValueError(f"window must hold exactly w={params.w} observations, got {len(window)}")
    return cd_statistic(window) > params.b


def calibrate_threshold(w: int, K: int, T: int) -> float:
    """Threshold sqrt(w log(2 K T^2) / 2) that keeps false alarms below 1/T."""
    if int(w) != w or w < 2 or w % 2:
        raise ValueError("w must be an even integer >= 2")
    if K < 1:
        raise ValueError("K must be >= 1")
    if T < 2:
        raise ValueError("T must be >= 2")
    return math.sqrt(w * math.log(2 * K * T * T) / 2)


def false_alarm_bound(w: int, b: float, K: int, T: int) -> float:
    """Upper bound on P(first detection <= T) for a stationary instance."""
    p = min(1.0, 2.0 * math.exp(-2.0 * b * b / w))
    return w * K * -math.expm1((T // w) * math.log1p(-p)) if p < 1.0 else float(w * K)


class Outcome(enum.Enum):
    INSUFFICIENT = "insufficient"
    NO_ALARM = "no_alarm"
    ALARM = "alarm"


class ChangeDetector:
    """Streaming detector for one arm.

    Keeps the last ``w`` post-reset observations in a ring buffer together with
    running sums of the older and newer halves, so each push is O(1). Sums are
    recomputed from the buffer every ``w`` pushes to stop rounding drift.
    """

    def __init__(self, params: DetectorParams):
        self.params = params
        self._buf = [0.0] * params.w
        self.reset()

    def reset(self) -> None:
        self.count = 0
        self._head = 0  # index of the oldest value once the buffer is full
        self.first_sum = 0.0
        self.second_sum = 0.0

    def window(self) -> list[float]:
        """Stored values, oldest first (at most ``w``)."""
        w = self.params.w
        if self.count < w:
            return self._buf[: self.count]
        return self._buf[self._head:] + self._buf[: self._head]

    def push(self, y: float) -> Outcome:
        if not 0.0 <= y <= 1.0:
            raise ValueError(f"observation {y!r} outside [0, 1]")
        w = self.params.w
        h = w // 2
        buf = self._buf
        if self.count < w:
            buf[self.count] = y
            if self.count < h:
                self.first_sum += y
            else:
                self.second_sum += y
        else:
            head = self._head
            mid = (head + h) % w
            self.first_sum += buf[mid] - buf[head]
            self.second_sum += y - buf[mid]
            buf[head] = y
            self._head = (head + 1) % w
        self.count += 1
        if self.count < w:
            return Outcome.INSUFFICIENT
        if self.count % w == 0:
            self.first_sum, self.second_sum = half_sums(self.window())
        stat = abs(self.second_sum - self.first_sum)
        b = self.params.b
        if abs(stat - b) <= _TIE_BAND * (1.0 + b):
            stat = cd_statistic(self.window())
        return Outcome.ALARM if stat > b else Outcome.NO_ALARM
