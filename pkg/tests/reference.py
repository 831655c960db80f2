"""Straight-line M-UCB written independently of the package, for trace comparison.

Only plain lists and floats: no detector ring buffer, no running sums. The
change-detection statistic is recomputed from the full per-arm history at
every step.
"""

import math


def reference_mucb(segment_ends, segment_means, K, w, b, gamma, uniforms):
    """Bernoulli M-UCB driven by pre-drawn uniforms (one per step).

    Returns (actions, rewards, restart_times) with 1-indexed arms.
    """
    T = len(uniforms)
    # floor of the rounded quotient: 2 // 0.2 is 9.0 in floats, math.floor(2 / 0.2) is 10
    period = math.floor(K / gamma) if gamma > 0 else 0
    tau = 0
    history = [[] for _ in range(K)]
    actions, rewards, restarts = [], [], []
    seg = 0
    for t in range(1, T + 1):
        while t > segment_ends[seg]:
            seg += 1
        s = t - tau
        offset = s % period if period else s
        if 1 <= offset <= K:
            arm = offset
        else:
            arm = None
            for k in range(K):
                if not history[k]:
                    arm = k + 1
                    break
            if arm is None:
                best, best_val = 0, -math.inf
                for k in range(K):
                    n = len(history[k])
                    total = 0.0
                    for x in history[k]:
                        total += x
                    val = total / n + math.sqrt(2.0 * math.log(s) / n)
                    if val > best_val:
                        best, best_val = k, val
                arm = best + 1
        x = 1.0 if uniforms[t - 1] < segment_means[seg][arm - 1] else 0.0
        actions.append(arm)
        rewards.append(x)
        hist = history[arm - 1]
        hist.append(x)
        if len(hist) >= w:
            window = hist[-w:]
            first = 0.0
            for v in window[: w // 2]:
                first += v
            second = 0.0
            for v in window[w // 2:]:
                second += v
            if abs(second - first) > b:
                tau = t
                history = [[] for _ in range(K)]
                restarts.append(t)
    return actions, rewards, restarts
