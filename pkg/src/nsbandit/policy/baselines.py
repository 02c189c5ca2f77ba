"""Stationary baselines: UCB1, DSEE and uniform random selection."""

from __future__ import annotations

import math

import numpy as np

from .base import Policy


def _argmax(values) -> int:
    """1-based index of the first maximum."""
    return max(range(len(values)), key=values.__getitem__) + 1


def ucb_select(counts, sums, t: int) -> int:
    """UCB1 choice at time ``t`` from full-history counts and reward sums."""
    n_arms = len(counts)
    if t <= n_arms:
        return t
    log_t = math.log(t - 1)
    for j, n in enumerate(counts):
        if n == 0:
            return j + 1
    return _argmax([s / n + math.sqrt(2.0 * log_t / n) for s, n in zip(sums, counts)])


class Ucb(Policy):
    def __init__(self, n_arms: int):
        super().__init__(n_arms)
        self.t = 0
        self.counts = [0] * n_arms
        self.sums = [0.0] * n_arms

    def select(self) -> int:
        arm = ucb_select(self.counts, self.sums, self.t + 1)
        self._emitted = arm
        return arm

    def _observe(self, arm: int, reward: float) -> None:
        self.t += 1
        self.counts[arm - 1] += 1
        self.sums[arm - 1] += reward


def dsee_threshold(n_arms: int, w: float, t: int) -> int:
    return n_arms * math.ceil(w * math.log(t))


class Dsee(Policy):
    """Classic DSEE: explore in full round-robin blocks whenever the
    exploration count falls below ``N ceil(w ln t)``, otherwise exploit the
    best mean over all exploration samples so far."""

    def __init__(self, n_arms: int, w: float):
        super().__init__(n_arms)
        if not w > 0:
            raise ValueError("w must be positive")
        self.w = w
        self.t = 0
        self.explore_steps = 0
        self.block_pos = 0  # arms already pulled in the running block
        self.counts = [0] * n_arms
        self.sums = [0.0] * n_arms
        self.exploring = False

    def select(self) -> int:
        arm = dsee_baseline_step(self, self.t + 1)
        self._emitted = arm
        return arm

    def _observe(self, arm: int, reward: float) -> None:
        self.t += 1
        if self.exploring:
            self.explore_steps += 1
            self.counts[arm - 1] += 1
            self.sums[arm - 1] += reward
            self.block_pos += 1
            if self.block_pos == self.n_arms:
                self.block_pos = 0
                self.exploring = False


def dsee_baseline_step(state: Dsee, t: int) -> int:
    if state.exploring:
        return state.block_pos + 1
    # at least one full block before exploiting, otherwise t=1 has no estimate
    if state.explore_steps == 0 or state.explore_steps < dsee_threshold(state.n_arms, state.w, t):
        state.exploring = True
        state.block_pos = 0
        return 1
    return _argmax([s / n for s, n in zip(state.sums, state.counts)])


class RandomPolicy(Policy):
    def __init__(self, n_arms: int, rng: np.random.Generator):
        super().__init__(n_arms)
        self.rng = rng

    def select(self) -> int:
        arm = int(self.rng.integers(1, self.n_arms + 1))
        self._emitted = arm
        return arm

    def _observe(self, arm: int, reward: float) -> None:
        pass
