import math
import random

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nsbandit.env import ConfigError
from nsbandit.policy import (
    EXPLOIT,
    EXPLORE,
    Dsee,
    LmDsee,
    LmDseeParams,
    ProtocolError,
    RandomPolicy,
    SlidingWindowStats,
    StepFeedback,
    SwUcbSharp,
    SwUcbSharpParams,
    Ucb,
    alpha_abrupt,
    alpha_slow,
    choose_l,
    confidence_radius,
    dsee_threshold,
    epoch_length,
    exploitation_length,
    exploration_length,
    l_condition,
    lmdsee_configure_abrupt,
    lmdsee_configure_slow,
    lmdsee_step,
    lmdsee_trajectory,
    swucb_window,
    swucbsharp_select,
    ucb_select,
    window_stats,
)


def run_policy(policy, T, reward_fn):
    """Drive a policy for T steps; returns the emitted arms."""
    arms = []
    for t in range(1, T + 1):
        arm = policy.select()
        policy.update(arm, reward_fn(t, arm))
        arms.append(arm)
    return arms


# -- LM-DSEE configuration --------------------------------------------------


def test_configure_abrupt_rho_values():
    assert lmdsee_configure_abrupt(10, 0.0, 0.3).rho == 1.0
    assert lmdsee_configure_abrupt(10, 1 / 3, 0.3).rho == pytest.approx(0.5)


def test_configure_abrupt_gamma():
    p = lmdsee_configure_abrupt(10, 0.2, 0.5, a=1, b=0.25)
    assert p.gamma == 8.0
    assert p.l == choose_l(10, 1, 0.25, 8.0)


def test_configure_slow_rho():
    assert lmdsee_configure_slow(10, 2 / 3, 1.0).rho == pytest.approx(1.0)
    p = lmdsee_configure_slow(10, 10.0, 1.0)
    assert p.rho == pytest.approx(3.0)
    assert p.slow_rule and p.gamma is None
    assert lmdsee_configure_slow(10, 1e-9, 1.0).rho == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize(
    "call",
    [
        lambda: lmdsee_configure_abrupt(10, 1.0, 0.3),
        lambda: lmdsee_configure_abrupt(10, 0.2, 0.0),
        lambda: lmdsee_configure_abrupt(10, 0.2, 0.3, b=1.5),
        lambda: lmdsee_configure_slow(10, 1.0, 4 / 3),
        lambda: lmdsee_configure_slow(10, 0.0, 1.0),
    ],
)
def test_configure_domain_errors(call):
    with pytest.raises(ConfigError):
        call()


# -- choose_l ---------------------------------------------------------------


def scan_oracle(n, a, b, gamma, upto):
    """Independent linear scan: one past the last l < upto that violates the inequality."""
    last_bad = 1
    for l in range(2, upto):
        g = 2 * l ** (2 / 3) if gamma is None else gamma
        L1 = math.ceil(g * math.log(l * b))
        if not (L1 >= 1 and math.ceil(a * l) - n * L1 >= n):
            last_bad = l
    return last_bad + 1


@pytest.mark.parametrize(
    "args, frozen",
    [
        ((10, 1.0, 0.25, 8.0), 380),
        ((1, 1.0, 1.0, 1.0), 2),
        ((10, 20.0, 1.0, None), 98),
        ((10, 1.0, 0.25, 2 / 0.3**2), 1300),
    ],
)
def test_choose_l_regression(args, frozen):
    assert scan_oracle(*args, upto=20_000) == frozen
    assert choose_l(*args) == frozen


def test_choose_l_skips_isolated_small_solutions():
    # l = 2 satisfies the slow-rule inequality, but l = 3..97 do not
    assert l_condition(2, 10, 20.0, 1.0, None)
    assert not l_condition(50, 10, 20.0, 1.0, None)
    assert choose_l(10, 20.0, 1.0, None) == 98


def test_choose_l_cap():
    with pytest.raises(ConfigError):
        choose_l(10, 1.0, 1.0, None, cap=10_000)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 12),
    st.floats(0.5, 30.0),
    st.floats(0.05, 1.0),
    st.one_of(st.none(), st.floats(0.5, 40.0)),
)
def test_choose_l_defining_inequality(n, a, b, gamma):
    if gamma is None:
        assume(a >= 5.0)
    l = choose_l(n, a, b, gamma)
    assert l_condition(l, n, a, b, gamma)
    assert not l_condition(l - 1, n, a, b, gamma)
    assert all(l_condition(x, n, a, b, gamma) for x in range(l, l + 2000))


# -- schedule lengths -------------------------------------------------------


def test_exploration_length_examples():
    assert exploration_length(1, LmDseeParams(2, 0.0, 1.0, math.e / 10, 10, 8.0)) == 8
    p = LmDseeParams(10, 0.5, 1.0, 0.25, 360, 8.0)
    assert exploration_length(1, p) == math.ceil(8 * math.log(90)) == 36
    assert exploration_length(4, p) == math.ceil(8 * math.log(180)) == 42


def test_exploration_length_slow_rule():
    p = LmDseeParams(10, 1.0, 20.0, 1.0, 94, None)
    assert exploration_length(2, p) == math.ceil(2 * (2 * 94) ** (2 / 3) * math.log(2 * 94))


def test_exploration_length_rejects_degenerate():
    with pytest.raises(ConfigError):
        exploration_length(1, LmDseeParams(2, 1.0, 1.0, 1.0, 1, 8.0))


def test_epoch_length_examples():
    p = LmDseeParams(10, 0.5, 1.0, 0.25, 360, 8.0)
    assert epoch_length(1, p) == 360
    assert epoch_length(4, p) == 720
    assert epoch_length(2, LmDseeParams(10, 1.0, 20.0, 1.0, 94, None)) == 3760


def test_exploitation_clamp_warns(caplog):
    p = LmDseeParams(10, 0.0, 1.0, 1.0, 20, 8.0)
    assert exploitation_length(1, p) == 0
    assert "exploitation skipped" in caplog.text


# -- LM-DSEE stepping -------------------------------------------------------


def tiny_params():
    # N=2, L(1)=ceil(0.5 ln 4)=1, epoch length ceil(1*4)=4
    return LmDseeParams(2, 0.0, 1.0, 1.0, 4, 0.5)


def test_lmdsee_unrolled_schedule():
    p = tiny_params()
    assert exploration_length(1, p) == 1 and epoch_length(1, p) == 4
    pol = LmDsee(p)
    rewards = {1: 0.2, 2: 0.7}
    arms = run_policy(pol, 4, lambda t, a: rewards[a])
    assert arms == [1, 2, 2, 2]


def test_lmdsee_exploit_argmax_first_arm():
    pol = LmDsee(tiny_params())
    arms = run_policy(pol, 4, lambda t, a: 0.9 if a == 1 else 0.1)
    assert arms == [1, 2, 1, 1]


def test_lmdsee_step_interface():
    pol = LmDsee(tiny_params())
    arm = lmdsee_step(pol)
    assert arm == 1
    assert lmdsee_step(pol, StepFeedback(1, 0.3)) == 2
    with pytest.raises(ProtocolError):
        lmdsee_step(pol, StepFeedback(1, 0.3))


def test_lmdsee_protocol_errors():
    pol = LmDsee(tiny_params())
    with pytest.raises(ProtocolError):
        pol.update(1, 0.5)
    pol.select()
    with pytest.raises(ProtocolError):
        pol.step()
    with pytest.raises(ProtocolError):
        pol.update(1, 1.5)


def simulate_phases(params, T, seed):
    rng = random.Random(seed)
    pol = LmDsee(params)
    labels = []
    arms = []
    for _ in range(T):
        labels.append((pol.epoch, pol.phase))
        arm = pol.select()
        arms.append(arm)
        pol.update(arm, rng.random())
    return labels, arms


def compress(labels):
    out = []
    for t, lab in enumerate(labels, start=1):
        if out and out[-1][0] == lab:
            out[-1][2] = t
        else:
            out.append([lab, t, t])
    return [(lab[0], lab[1], s, e) for lab, s, e in out]


def test_trajectory_truncation_examples():
    p = LmDseeParams(10, 0.5, 1.0, 0.25, 360, 8.0)
    traj = lmdsee_trajectory(p, 400)
    assert traj[0] == (1, EXPLORE, 1, 360)
    # epoch 1 is all exploration (10 * 36 = 360), epoch 2 starts at 361
    assert [ph.epoch for ph in traj] == [1, 2]
    assert traj[-1].t_end == 400
    short = lmdsee_trajectory(p, 50)
    assert short == [(1, EXPLORE, 1, 50)]


def test_trajectory_covers_horizon():
    p = lmdsee_configure_abrupt(10, 0.2, 0.3)
    traj = lmdsee_trajectory(p, 50_000)
    assert traj[0].t_start == 1 and traj[-1].t_end == 50_000
    for a, b in zip(traj, traj[1:]):
        assert b.t_start == a.t_end + 1


def test_trajectory_matches_stepping_across_seeds():
    p = LmDseeParams(3, 0.7, 2.0, 0.5, 40, 3.0)
    T = 3000
    traj = lmdsee_trajectory(p, T)
    for seed in range(100):
        labels, _ = simulate_phases(p, T, seed)
        assert compress(labels) == traj


def test_per_epoch_exploration_counts():
    p = LmDseeParams(4, 0.5, 1.5, 0.5, 60, 4.0)
    T = 6000
    labels, arms = simulate_phases(p, T, 1)
    traj = lmdsee_trajectory(p, T)
    complete = {ph.epoch for ph in traj if ph.phase == EXPLOIT and ph.t_end < T}
    for k in complete:
        pulls = [a for (e, ph), a in zip(labels, arms) if e == k and ph == EXPLORE]
        L = exploration_length(k, p)
        assert [pulls.count(j) for j in range(1, 5)] == [L] * 4
        n_epoch = sum(1 for e, _ in labels if e == k)
        assert n_epoch == epoch_length(k, p)


def test_limited_memory():
    p = LmDseeParams(3, 0.5, 2.0, 0.5, 30, 2.0)
    T = 800
    traj = lmdsee_trajectory(p, T)
    base_rng = random.Random(4)
    base = [[base_rng.random() for _ in range(3)] for _ in range(T)]
    _, arms = _run_table(p, base)
    for ph in traj:
        if ph.phase != EXPLORE or ph.t_end == T:
            continue
        # scramble every reward before this exploration block
        pert = [row[:] for row in base]
        rng = random.Random(ph.epoch)
        for t in range(ph.t_start - 1):
            pert[t] = [rng.random() for _ in range(3)]
        _, arms2 = _run_table(p, pert)
        exploit_t = ph.t_end + 1
        assert arms2[exploit_t - 1] == arms[exploit_t - 1]


def _run_table(p, table):
    pol = LmDsee(p)
    arms = []
    for row in table:
        arm = pol.select()
        pol.update(arm, row[arm - 1])
        arms.append(arm)
    return pol, arms


# -- SW-UCB# ----------------------------------------------------------------


def test_alpha_rules():
    assert alpha_abrupt(0.2) == pytest.approx(0.4)
    assert alpha_slow(2.0) == 1.0
    assert alpha_slow(0.5) == pytest.approx(0.375)


def test_window_examples():
    assert swucb_window(100, 0.5, 12.3) == 100
    assert swucb_window(100, 0.5, 1.0) == 10
    assert swucb_window(1, 0.3, 0.01) == 1


@given(st.floats(0.01, 1.0), st.floats(0.1, 50.0))
def test_window_monotone_and_clamped(alpha, lam):
    prev = 0
    for t in range(1, 400):
        w = swucb_window(t, alpha, lam)
        assert 1 <= w <= t
        assert w >= prev
        prev = w
        if lam * t**alpha >= t:
            assert w == t


def test_window_stats_hand_example():
    s = SlidingWindowStats(2)
    for arm, r in [(1, 0.2), (2, 0.8), (1, 0.4)]:
        s.push(arm, r)
    # lambda chosen so that tau(3) = ceil(1.0 * 3^0.5) = 2
    stats = window_stats(s, 3, 0.5, 1.0)
    assert stats[0] == (1, pytest.approx(0.4))
    assert stats[1] == (1, pytest.approx(0.8))


def test_window_stats_full_window_single_arm():
    s = SlidingWindowStats(1)
    xs = [0.1, 0.5, 0.9, 0.3]
    for x in xs:
        s.push(1, x)
    assert window_stats(s, 4, 1.0, 10.0) == [(4, pytest.approx(np.mean(xs)))]


def test_window_stats_unseen_arm_marker():
    s = SlidingWindowStats(3)
    s.push(1, 0.5)
    n, m = window_stats(s, 1, 0.5, 1.0)[2]
    assert n == 0 and math.isnan(m)


def brute_window(arms, rewards, t, alpha, lam, n_arms):
    tau = swucb_window(t, alpha, lam)
    lo = t - tau
    out = []
    for j in range(1, n_arms + 1):
        xs = [r for a, r in zip(arms[lo:t], rewards[lo:t]) if a == j]
        out.append((len(xs), sum(xs) / len(xs) if xs else math.nan))
    return out


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.floats(0.05, 1.0), st.floats(0.2, 20.0), st.integers(0, 2**31))
def test_window_stats_match_bruteforce(n, alpha, lam, seed):
    rng = random.Random(seed)
    s = SlidingWindowStats(n)
    for t in range(1, 300):
        a, r = rng.randint(1, n), rng.random()
        s.push(a, r)
        got = window_stats(s, t, alpha, lam)
        ref = brute_window(s.arms, s.rewards, t, alpha, lam, n)
        for (gn, gm), (rn, rm) in zip(got, ref):
            assert gn == rn
            assert (math.isnan(gm) and math.isnan(rm)) or abs(gm - rm) < 1e-10


def test_window_can_move_back():
    s = SlidingWindowStats(2)
    for a in (1, 2, 1, 2):
        s.push(a, 0.5)
    s.slide(4)
    assert s.counts == [0, 1]
    s.slide(1)
    assert s.counts == [2, 2]
    with pytest.raises(RuntimeError):
        s.slide(6)


def test_confidence_radius_examples():
    assert confidence_radius(math.e, 0.0, 1) == pytest.approx(1.0)
    assert confidence_radius(100, 0.5, 10) == pytest.approx(math.sqrt(1.5 * math.log(100) / 10))
    assert confidence_radius(100, 0.5, 10) == pytest.approx(0.8311, abs=1e-4)
    assert confidence_radius(50, 0.3, 28) == pytest.approx(confidence_radius(50, 0.3, 7) / 2)
    with pytest.raises(ValueError):
        confidence_radius(10, 0.5, 0)


@given(st.integers(2, 10**6), st.floats(0.01, 1.0), st.integers(1, 10**5))
def test_index_strictly_decreasing_in_count(t, alpha, n):
    assert confidence_radius(t, alpha, n + 1) < confidence_radius(t, alpha, n)


def test_swucb_initialisation():
    pol = SwUcbSharp(SwUcbSharpParams(10, 0.4, 12.3))
    arms = run_policy(pol, 10, lambda t, a: 0.5)
    assert arms == list(range(1, 11))


def test_swucb_prefers_less_sampled_on_equal_means():
    s = SlidingWindowStats(2)
    for a in (1, 2, 2, 2):
        s.push(a, 0.5)
    assert swucbsharp_select(s, SwUcbSharpParams(2, 1.0, 100.0)) == 1


def exhaustive_index(state, params, shift=0.0):
    t = state.t
    stats = window_stats(state, t, params.alpha, params.lam)
    idx = []
    for n, m in stats:
        idx.append(math.inf if n == 0 else m + confidence_radius(t, params.alpha, n) + shift)
    best = max(idx)
    return idx.index(best) + 1


def test_swucb_matches_exhaustive_index():
    params = SwUcbSharpParams(3, 0.5, 2.0)
    rng = random.Random(0)
    s = SlidingWindowStats(3)
    for t in range(1, 2000):
        if t > 3:
            expected = exhaustive_index(s, params)
            assert swucbsharp_select(s, params) == expected
        s.push(rng.randint(1, 3), rng.random())


def test_swucb_forced_pull_for_empty_window_arm():
    params = SwUcbSharpParams(3, 0.5, 1.0)
    s = SlidingWindowStats(3)
    for a in [1, 2, 3] + [1, 2] * 20:
        s.push(a, 0.9)
    # tau(43) = ceil(43^0.5) = 7: arm 3 has not been pulled within it
    assert swucbsharp_select(s, params) == 3


@pytest.mark.parametrize("shift", [0.0, 0.5, -0.25, 3.0])
def test_swucb_argmax_shift_invariance(shift):
    params = SwUcbSharpParams(4, 0.4, 3.0)
    rng = random.Random(3)
    s = SlidingWindowStats(4)
    for t in range(1, 500):
        if t > 4:
            assert swucbsharp_select(s, params) == exhaustive_index(s, params, shift)
        s.push(rng.randint(1, 4), rng.random())


def test_swucb_params_domain():
    with pytest.raises(ConfigError):
        SwUcbSharpParams(3, 0.0, 1.0)
    with pytest.raises(ConfigError):
        SwUcbSharpParams(3, 0.5, 0.0)


# -- baselines --------------------------------------------------------------


def test_ucb_initialisation_and_tie():
    assert ucb_select([0, 0, 0], [0.0, 0.0, 0.0], 2) == 2
    assert ucb_select([2, 2, 2], [1.0, 1.0, 1.0], 7) == 1


def test_ucb_two_arm_hand_index():
    counts, sums = [3, 7], [2.4, 4.9]
    t = 11
    i1 = 2.4 / 3 + math.sqrt(2 * math.log(10) / 3)  # 0.8 + 1.2389
    i2 = 4.9 / 7 + math.sqrt(2 * math.log(10) / 7)  # 0.7 + 0.8111
    assert i1 > i2
    assert ucb_select(counts, sums, t) == 1
    # with 30 pulls on arm 1 its bonus shrinks to 0.4907 against 0.7 + 1.0176 for arm 2
    assert ucb_select([30, 7], [24.0, 4.9], 38) == 2


def test_ucb_policy_round_robin_start():
    assert run_policy(Ucb(4), 4, lambda t, a: 0.3) == [1, 2, 3, 4]


def test_dsee_starts_exploring():
    pol = Dsee(3, 1.0)
    assert pol.select() == 1


def test_dsee_exploration_count():
    pol = Dsee(2, 1.0)
    rng = random.Random(0)
    arms = []
    explore_flags = []
    for t in range(1, 101):
        arm = pol.select()
        explore_flags.append(pol.exploring)
        arms.append(arm)
        pol.update(arm, rng.random())
        # after each step the count meets the threshold up to one unfinished block
        assert pol.explore_steps >= dsee_threshold(2, 1.0, t) - 2 or pol.exploring
    assert sum(explore_flags) == pol.explore_steps
    assert abs(pol.explore_steps - 2 * math.ceil(math.log(100))) <= 2


def test_dsee_small_w_exploits():
    pol = Dsee(2, 1e-6)
    arms = run_policy(pol, 200, lambda t, a: 0.9 if a == 2 else 0.1)
    assert arms[:2] == [1, 2]
    assert pol.explore_steps <= 4
    assert arms[-1] == 2


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.sampled_from(["lmdsee", "swucb", "ucb", "dsee", "random"]), st.integers(0, 2**31))
def test_outputs_in_range(n, kind, seed):
    rng = random.Random(seed)
    if kind == "lmdsee":
        pol = LmDsee(LmDseeParams(n, 0.5, 1.0, 1.0, choose_l(n, 1.0, 1.0, 2.0), 2.0))
    elif kind == "swucb":
        pol = SwUcbSharp(SwUcbSharpParams(n, 0.5, 2.0))
    elif kind == "ucb":
        pol = Ucb(n)
    elif kind == "dsee":
        pol = Dsee(n, 0.5)
    else:
        pol = RandomPolicy(n, np.random.default_rng(seed))
    arms = run_policy(pol, 300, lambda t, a: rng.random())
    assert all(1 <= a <= n for a in arms)
