"""Compiled episode loops.

Each kernel plays a whole episode against pre-drawn noise and returns
``(actions, rewards, restart_flags)``. The arithmetic mirrors the pure-Python
policies operation for operation; ``tests/test_engines.py`` holds the two
routes to bit-identical traces.
"""

from __future__ import annotations

import math

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
    _jit = numba.njit(cache=True, nogil=True)
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def _jit(fn):
        return fn

_TIE_BAND = 1e-9
_DUCB_RECOMPUTE_EVERY = 10_000


@_jit
def _reward(family, mu, noise, scale):
    if family == 0:
        return 1.0 if noise < mu else 0.0
    if family == 1:
        x = mu + scale * noise
    else:
        x = mu + scale * (2.0 * noise - 1.0)
    return min(1.0, max(0.0, x))


@_jit
def _window_stat(buf, head, w):
    h = w // 2
    s1 = 0.0
    s2 = 0.0
    for i in range(w):
        v = buf[(head + i) % w]
        if i < h:
            s1 += v
        else:
            s2 += v
    return s1, s2


@_jit
def _detector_push(buf, head, s1, s2, k, n, x, w, b):
    """Push ``x`` into row ``k`` holding ``n`` values; 0 insufficient, 1 no alarm, 2 alarm."""
    h = w // 2
    if n < w:
        buf[k, n] = x
        if n < h:
            s1[k] += x
        else:
            s2[k] += x
    else:
        hd = head[k]
        mid = (hd + h) % w
        s1[k] += buf[k, mid] - buf[k, hd]
        s2[k] += x - buf[k, mid]
        buf[k, hd] = x
        head[k] = (hd + 1) % w
    n += 1
    if n < w:
        return 0
    if n % w == 0:
        a1, a2 = _window_stat(buf[k], head[k], w)
        s1[k] = a1
        s2[k] = a2
    stat = abs(s2[k] - s1[k])
    if abs(stat - b) <= _TIE_BAND * (1.0 + b):
        a1, a2 = _window_stat(buf[k], head[k], w)
        stat = abs(a2 - a1)
    return 2 if stat > b else 1


@_jit
def detector_stream(ys, w, b):
    """Outcome codes of one streaming detector fed ``ys`` with no resets."""
    buf = np.zeros((1, w), np.float64)
    head = np.zeros(1, np.int64)
    s1 = np.zeros(1, np.float64)
    s2 = np.zeros(1, np.float64)
    out = np.empty(ys.shape[0], np.int8)
    for i in range(ys.shape[0]):
        out[i] = _detector_push(buf, head, s1, s2, 0, i, ys[i], w, b)
    return out


@_jit
def scheduled_ucb_episode(seg_ends, means, family, scale, noise, K, w, b, period, use_cd):
    T = noise.shape[0]
    actions = np.empty(T, np.int64)
    rewards = np.empty(T, np.float64)
    restarted = np.zeros(T, np.bool_)
    counts = np.zeros(K, np.int64)
    sums = np.zeros(K, np.float64)
    wb = w if use_cd else 2
    buf = np.zeros((K, wb), np.float64)
    head = np.zeros(K, np.int64)
    s1 = np.zeros(K, np.float64)
    s2 = np.zeros(K, np.float64)
    tau = 0
    seg = 0
    for t in range(1, T + 1):
        while t > seg_ends[seg]:
            seg += 1
        s = t - tau
        offset = s % period if period > 0 else s
        arm = -1
        if 1 <= offset <= K:
            arm = offset - 1
        else:
            for k in range(K):
                if counts[k] == 0:
                    arm = k
                    break
            if arm < 0:
                log_s = math.log(s)
                best_val = 0.0
                for k in range(K):
                    v = sums[k] / counts[k] + math.sqrt(2.0 * log_s / counts[k])
                    if arm < 0 or v > best_val:
                        arm = k
                        best_val = v
        x = _reward(family, means[seg, arm], noise[t - 1], scale)
        actions[t - 1] = arm + 1
        rewards[t - 1] = x
        n = counts[arm]
        counts[arm] = n + 1
        sums[arm] += x
        if not use_cd:
            continue
        # detector push; its count always equals counts[arm]
        if _detector_push(buf, head, s1, s2, arm, n, x, w, b) == 2:
            restarted[t - 1] = True
            tau = t
            for k in range(K):
                counts[k] = 0
                sums[k] = 0.0
                head[k] = 0
                s1[k] = 0.0
                s2[k] = 0.0
    return actions, rewards, restarted


@_jit
def ducb_episode(seg_ends, means, family, scale, noise, K, discount, xi):
    T = noise.shape[0]
    actions = np.empty(T, np.int64)
    rewards = np.empty(T, np.float64)
    counts = np.zeros(K, np.float64)
    sums = np.zeros(K, np.float64)
    c = 4.0 * xi
    seg = 0
    for t in range(1, T + 1):
        while t > seg_ends[seg]:
            seg += 1
        arm = -1
        for k in range(K):
            if counts[k] == 0.0:
                arm = k
                break
        if arm < 0:
            total = 0.0
            for k in range(K):
                total += counts[k]
            log_n = math.log(1.0 + discount * total)
            best_val = 0.0
            for k in range(K):
                v = sums[k] / counts[k] + math.sqrt(c * log_n / counts[k])
                if arm < 0 or v > best_val:
                    arm = k
                    best_val = v
        x = _reward(family, means[seg, arm], noise[t - 1], scale)
        actions[t - 1] = arm + 1
        rewards[t - 1] = x
        if t % _DUCB_RECOMPUTE_EVERY == 0:
            for k in range(K):
                counts[k] = 0.0
                sums[k] = 0.0
            for s in range(t):
                wgt = math.pow(discount, t - 1 - s)
                a = actions[s] - 1
                counts[a] += wgt
                sums[a] += wgt * rewards[s]
            continue
        for k in range(K):
            counts[k] *= discount
            sums[k] *= discount
        counts[arm] += 1.0
        sums[arm] += x
    return actions, rewards, np.zeros(T, np.bool_)


@_jit
def swucb_episode(seg_ends, means, family, scale, noise, K, window, xi):
    T = noise.shape[0]
    actions = np.empty(T, np.int64)
    rewards = np.empty(T, np.float64)
    counts = np.zeros(K, np.int64)
    sums = np.zeros(K, np.float64)
    ring_arm = np.zeros(window, np.int64)
    ring_x = np.zeros(window, np.float64)
    seg = 0
    for t in range(1, T + 1):
        while t > seg_ends[seg]:
            seg += 1
        arm = -1
        for k in range(K):
            if counts[k] == 0:
                arm = k
                break
        if arm < 0:
            log_n = math.log(min(t, window))
            best_val = 0.0
            for k in range(K):
                v = sums[k] / counts[k] + math.sqrt(xi * log_n / counts[k])
                if arm < 0 or v > best_val:
                    arm = k
                    best_val = v
        x = _reward(family, means[seg, arm], noise[t - 1], scale)
        actions[t - 1] = arm + 1
        rewards[t - 1] = x
        n = t - 1
        pos = n % window
        if n >= window:
            old = ring_arm[pos]
            counts[old] -= 1
            sums[old] -= ring_x[pos]
        ring_arm[pos] = arm
        ring_x[pos] = x
        counts[arm] += 1
        sums[arm] += x
        if t % window == 0:
            for k in range(K):
                sums[k] = 0.0
            for i in range(window):
                sums[ring_arm[i]] += ring_x[i]
    return actions, rewards, np.zeros(T, np.bool_)


@_jit
def exp3s_episode(seg_ends, means, family, scale, noise, policy_u, K, gamma, alpha):
    T = noise.shape[0]
    actions = np.empty(T, np.int64)
    rewards = np.empty(T, np.float64)
    weights = np.full(K, 1.0 / K)
    probs = np.empty(K, np.float64)
    seg = 0
    for t in range(1, T + 1):
        while t > seg_ends[seg]:
            seg += 1
        total = 0.0
        for k in range(K):
            total += weights[k]
        for k in range(K):
            probs[k] = (1.0 - gamma) * (weights[k] / total) + gamma / K
        u = policy_u[t - 1]
        arm = K - 1
        acc = 0.0
        for k in range(K - 1):
            acc += probs[k]
            if u < acc:
                arm = k
                break
        x = _reward(family, means[seg, arm], noise[t - 1], scale)
        actions[t - 1] = arm + 1
        rewards[t - 1] = x
        share = math.e * alpha / K * total
        weights[arm] = weights[arm] * math.exp(gamma * (x / probs[arm]) / K)
        for k in range(K):
            weights[k] += share
        total = 0.0
        for k in range(K):
            total += weights[k]
        for k in range(K):
            weights[k] = weights[k] / total
    return actions, rewards, np.zeros(T, np.bool_)
