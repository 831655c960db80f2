import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mucb.env import episode_streams, make_piecewise_env
from mucb.policies import (DUCB, EXP3, EXP3S, MUCB, SWUCB, UCB1, PolicySpec, default_params,
                           ducb_defaults, ducb_statistics, exp3_defaults, exp3_probs, exp3_update,
                           exp3s_defaults, exp3s_update, make_policy, sample_from, schedule_period,
                           swucb_defaults)
from mucb.sim import play, run_episode

from reference import reference_mucb


def drive(policy, rewards_of):
    """Feed a policy deterministic rewards; return (actions, restart flags)."""
    actions, flags = [], []
    for t in range(1, len(rewards_of) + 1):
        a = policy.select(t)
        actions.append(a)
        flags.append(policy.update(t, a, rewards_of[t - 1][a - 1]))
    return actions, flags


# -- schedule ---------------------------------------------------------------

def test_schedule_period():
    assert schedule_period(2, 0.2) == 10
    assert schedule_period(10, 0.3) == 33
    assert schedule_period(3, 0.0) == 0


def test_period_too_short_rejected():
    with pytest.raises(ValueError, match="K \\+ 1"):
        MUCB(3, 10, 5.0, 0.9)
    MUCB(3, 10, 5.0, 0.75)  # floor(3/0.75) = 4 = K + 1 is allowed


def test_mucb_forced_offsets():
    # offsets 1..K of each period of length P pull arm A; others take UCB
    pol = MUCB(3, 4, 1e9, 0.3)  # P = 10, detector never fires
    rng = np.random.default_rng(0)
    for t in range(1, 61):
        a = pol.select(t)
        if 1 <= t % 10 <= 3:
            assert a == t % 10
        else:  # offset 0 included
            idx = pol.ucb_indices(t)
            assert a == idx.index(max(idx)) + 1
        pol.update(t, a, float(rng.random()))


def test_ucb_tie_goes_to_smallest_index():
    pol = UCB1(3)
    for t, a in enumerate((1, 2, 3), start=1):
        assert pol.select(t) == a
        pol.update(t, a, 0.5)
    assert pol.select(4) == 1


def test_restart_resets_everything():
    pol = MUCB(2, 4, 1.5, 0.5)  # P = 4: offsets 1, 2 forced
    rewards = [[0.0, 0.0]] * 8 + [[1.0, 1.0]] * 8
    acts, flags = drive(pol, rewards)
    assert any(flags)
    t = flags.index(True) + 1
    assert pol.restarts[0] == t
    # right after the restart the schedule restarts at offset 1
    assert acts[t] == 1 and acts[t + 1] == 2


def test_infinite_threshold_is_ucb_with_exploration():
    K, T = 3, 600
    rng = np.random.default_rng(1)
    rewards = (rng.random((T, K)) < [0.2, 0.5, 0.7]).astype(float).tolist()
    a1, f1 = drive(MUCB(K, 10, math.inf, 0.2), rewards)
    a2, _ = drive(UCB1(K, 0.2), rewards)
    assert a1 == a2 and not any(f1)


@given(seed=st.integers(0, 2**31 - 1), K=st.integers(2, 4), half_w=st.integers(1, 8),
       gamma=st.sampled_from([0.05, 0.1, 0.2, 0.3]), b_frac=st.floats(0.1, 0.6))
@settings(max_examples=40, deadline=None)
def test_mucb_matches_reference(seed, K, half_w, gamma, b_frac):
    if schedule_period(K, gamma) < K + 1:
        return
    w = 2 * half_w
    rng = np.random.default_rng(seed)
    env = make_piecewise_env(K, [150, 150, 100], rng.random((3, K)))
    b = b_frac * w
    tr = run_episode(env, PolicySpec("m_ucb", {"w": w, "b": b, "gamma": gamma}), seed, "python")
    u = episode_streams(seed)[0].random(env.T)
    a, r, rst = reference_mucb(env.boundaries[1:], env.segment_means.tolist(), K, w, b, gamma, u)
    assert tr.actions.tolist() == a
    assert tr.rewards.tolist() == r
    assert list(tr.restarts) == rst


@given(seed=st.integers(0, 2**31 - 1), K=st.integers(1, 5), half_w=st.integers(1, 6),
       gamma=st.sampled_from([0.05, 0.1, 0.25, 0.4]), detect=st.booleans())
@settings(max_examples=40, deadline=None)
def test_schedule_coverage(seed, K, half_w, gamma, detect):
    """Every restart-free span of w*P steps pulls each arm at least w times."""
    P = schedule_period(K, gamma)
    if P < K + 1:
        return
    w = 2 * half_w
    rng = np.random.default_rng(seed)
    env = make_piecewise_env(K, [200, 200], rng.random((2, K)))
    b = 0.3 * w if detect else math.inf
    tr = run_episode(env, PolicySpec("m_ucb", {"w": w, "b": b, "gamma": gamma}), seed, "python")
    bounds = [0] + list(tr.restarts) + [env.T]
    span = w * P
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        # steps lo+1 .. hi were played without a restart before the last one
        for start in range(lo + 1, hi - span + 2):
            seg = tr.actions[start - 1: start - 1 + span]
            assert np.bincount(seg, minlength=K + 1)[1:].min() >= w


# -- D-UCB ------------------------------------------------------------------

def test_ducb_without_discount_is_ucb1():
    K, T = 4, 800
    rng = np.random.default_rng(3)
    rewards = (rng.random((T, K)) < [0.3, 0.5, 0.45, 0.6]).astype(float).tolist()
    pol_u = UCB1(K)
    pol_d = DUCB(K, 1.0, 0.5)
    for t in range(1, T + 1):
        au, ad = pol_u.select(t), pol_d.select(t)
        assert au == ad
        if t > K:
            assert pol_u.ucb_indices(t) == pol_d.ucb_indices(t)
        pol_u.update(t, au, rewards[t - 1][au - 1])
        pol_d.update(t, ad, rewards[t - 1][ad - 1])


@given(g=st.floats(0.9, 1.0), seed=st.integers(0, 2**31 - 1), n=st.integers(1, 300))
@settings(max_examples=40, deadline=None)
def test_ducb_count_sum_identity(g, seed, n):
    rng = np.random.default_rng(seed)
    pol = DUCB(3, g)
    acts = []
    rews = []
    for t in range(1, n + 1):
        a = pol.select(t)
        x = float(rng.random())
        pol.update(t, a, x)
        acts.append(a)
        rews.append(x)
    total = sum(pol.counts)
    want = n if g == 1.0 else (1 - g ** n) / (1 - g)
    assert total == pytest.approx(want, rel=1e-9)
    counts, sums = ducb_statistics(acts, rews, 3, g)
    np.testing.assert_allclose(pol.counts, counts, rtol=1e-9)
    np.testing.assert_allclose(pol.sums, sums, rtol=1e-9, atol=1e-12)


def test_ducb_periodic_recompute_keeps_state():
    pol = DUCB(2, 0.999)
    rng = np.random.default_rng(0)
    for t in range(1, 10_002):
        a = pol.select(t)
        pol.update(t, a, float(rng.random() < 0.5))
    counts, _ = ducb_statistics(pol._actions, pol._rewards, 2, 0.999)
    np.testing.assert_allclose(pol.counts, counts, rtol=1e-12)


# -- SW-UCB -----------------------------------------------------------------

@given(window=st.integers(1, 30), seed=st.integers(0, 2**31 - 1), n=st.integers(1, 200))
@settings(max_examples=40, deadline=None)
def test_swucb_window_statistics(window, seed, n):
    rng = np.random.default_rng(seed)
    pol = SWUCB(3, window)
    hist = []
    for t in range(1, n + 1):
        a = pol.select(t)
        x = float(rng.random())
        pol.update(t, a, x)
        hist.append((a, x))
    recent = hist[-window:]
    for k in range(1, 4):
        assert pol.counts[k - 1] == sum(1 for a, _ in recent if a == k)
        assert pol.sums[k - 1] == pytest.approx(sum(x for a, x in recent if a == k), abs=1e-9)
    assert sum(pol.counts) == min(n, window)


def test_swucb_forgets():
    pol = SWUCB(2, 10)
    acts, _ = drive(pol, [[1.0, 0.0]] * 50 + [[0.0, 1.0]] * 50)
    assert acts[-20:].count(2) > 15


# -- exponential weights ----------------------------------------------------

weights_st = st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=8)


@given(w=weights_st, gamma=st.floats(1e-3, 1.0))
def test_exp3_probs_simplex_and_floor(w, gamma):
    p = exp3_probs(w, gamma)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(p >= gamma / len(w) - 1e-15)


@given(w=weights_st, gamma=st.floats(1e-3, 1.0), c=st.floats(1e-3, 1e3))
def test_exp3_probs_scale_invariant(w, gamma, c):
    np.testing.assert_allclose(exp3_probs(w, gamma), exp3_probs([c * x for x in w], gamma),
                               rtol=1e-12, atol=1e-15)


@given(w=weights_st, gamma=st.floats(1e-3, 1.0), x=st.floats(0.0, 1.0), data=st.data())
def test_exp3_update_matches_formula(w, gamma, x, data):
    K = len(w)
    arm = data.draw(st.integers(1, K))
    p = exp3_probs(w, gamma)
    new = exp3_update(w, arm, x, p, gamma)
    raw = list(w)
    raw[arm - 1] *= math.exp(gamma * x / p[arm - 1] / K)
    ref = np.array(raw) / sum(raw)
    np.testing.assert_allclose(new, ref, rtol=1e-9)
    assert new.sum() == pytest.approx(1.0)


def test_exp3s_share():
    w = np.array([0.5, 0.25, 0.25])
    p = exp3_probs(w, 0.1)
    new = exp3s_update(w, 1, 0.0, p, 0.1, alpha=0.3)
    # zero reward: every weight gains e*alpha/K of the total (1.0), then renormalised
    share = math.e * 0.3 / 3
    ref = (w + share) / (1 + 3 * share)
    np.testing.assert_allclose(new, ref, rtol=1e-12)


def test_sample_from_inverse_cdf():
    p = [0.2, 0.5, 0.3]
    assert sample_from(p, 0.0) == 1
    assert sample_from(p, 0.19999) == 1
    assert sample_from(p, 0.2) == 2
    assert sample_from(p, 0.69999) == 2
    assert sample_from(p, 0.7) == 3
    assert sample_from(p, 0.9999999) == 3


def test_exp3_frequencies_follow_probs():
    pol = EXP3(3, 1.0, np.random.default_rng(0))  # gamma = 1 keeps p uniform
    counts = np.zeros(4)
    for t in range(1, 30_001):
        a = pol.select(t)
        counts[a] += 1
        pol.update(t, a, 1.0)
    np.testing.assert_allclose(counts[1:] / 30_000, 1 / 3, atol=0.01)


def test_exp3s_learns_best_arm():
    rng = np.random.default_rng(2)
    pol = EXP3S(3, 0.1, 1e-4, np.random.default_rng(1))
    acts = []
    for t in range(1, 5001):
        a = pol.select(t)
        pol.update(t, a, float(rng.random() < [0.2, 0.8, 0.2][a - 1]))
        acts.append(a)
    assert acts[-1000:].count(2) > 700


# -- parameter rules and construction ------------------------------------------

def test_baseline_default_rules():
    T, M, K = 43_200, 9, 6
    assert ducb_defaults(T, M)["discount"] == pytest.approx(1 - 0.25 * math.sqrt(8 / T))
    assert swucb_defaults(T, M)["window"] == math.ceil(2 * math.sqrt(T * math.log(T) / 8))
    assert exp3_defaults(K, T)["gamma"] == pytest.approx(math.sqrt(K * math.log(K) / ((math.e - 1) * T)))
    d = exp3s_defaults(K, T, M)
    assert d["alpha"] == 1 / T
    assert d["gamma"] == pytest.approx(math.sqrt(K * (M * math.log(K * T) + math.e) / ((math.e - 1) * T)))
    assert swucb_defaults(100, 1)["window"] == 100
    with pytest.raises(ValueError, match="w, b, gamma"):
        default_params("m_ucb", K, T, M)


def test_unknown_policy_lists_valid_names():
    with pytest.raises(ValueError, match="valid policies: m_ucb, ucb1"):
        PolicySpec("thompson")


@pytest.mark.parametrize("name, params", [
    ("m_ucb", {"w": 3, "b": 1.0, "gamma": 0.1}),
    ("m_ucb", {"w": 4, "b": 1.0, "gamma": 0.0}),
    ("d_ucb", {"discount": 1.5}),
    ("sw_ucb", {"window": 0}),
    ("exp3", {"gamma": 0.0}),
])
def test_bad_parameters_rejected(name, params):
    with pytest.raises(ValueError):
        make_policy(PolicySpec(name, params), 3, np.random.default_rng(0))


def test_play_records_restarts():
    env = make_piecewise_env(2, [300, 300], [[0.95, 0.05], [0.05, 0.95]])
    pol = MUCB(2, 20, 6.0, 0.2)
    tr = play(env, pol, np.random.default_rng(0))
    assert list(tr.restarts) == pol.restarts
    assert any(300 < t < 500 for t in tr.restarts)
