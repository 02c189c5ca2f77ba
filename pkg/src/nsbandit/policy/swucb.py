"""Sliding-window UCB with a window that grows as ``min(ceil(lambda t^alpha), t)``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from ..env import ConfigError
from .base import Policy


@dataclass(frozen=True)
class SwUcbSharpParams:
    n_arms: int
    alpha: float
    lam: float
    # accepted for the abrupt tuning interface, never read by the selection rule
    delta_min: Optional[float] = None

    def __post_init__(self):
        if self.n_arms < 1:
            raise ConfigError("n_arms must be positive")
        if not 0 < self.alpha <= 1:
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha}")
        if not self.lam > 0:
            raise ConfigError("lambda must be positive")


def alpha_abrupt(nu: float) -> float:
    if not 0 <= nu < 1:
        raise ConfigError("nu must be in [0, 1)")
    return (1.0 - nu) / 2.0


def alpha_slow(kappa: float) -> float:
    if not kappa > 0:
        raise ConfigError("kappa must be positive")
    return min(1.0, 3.0 * kappa / 4.0)


def swucb_window(t: int, alpha: float, lam: float) -> int:
    return min(math.ceil(lam * t**alpha), t)


def confidence_radius(t: int, alpha: float, n: int) -> float:
    if n < 1:
        raise ValueError("confidence radius undefined for an arm with no samples in the window")
    return math.sqrt((1.0 + alpha) * math.log(t) / n)


class SlidingWindowStats:
    """Per-arm counts and reward sums over the trailing window.

    The full (arm, reward) history is kept, so the window may move in either
    direction; in practice its left edge advances by at most one step per call.
    """

    def __init__(self, n_arms: int):
        self.n_arms = n_arms
        self.arms: list[int] = []
        self.rewards: list[float] = []
        self.counts = [0] * n_arms
        self.sums = [0.0] * n_arms
        self.start = 1  # first step (1-based) inside the tracked window

    @property
    def t(self) -> int:
        return len(self.arms)

    def push(self, arm: int, reward: float) -> None:
        self.arms.append(arm)
        self.rewards.append(reward)
        self.counts[arm - 1] += 1
        self.sums[arm - 1] += reward

    def slide(self, start: int) -> None:
        """Move the window's left edge to ``start`` (window end stays at the latest step)."""
        if not 1 <= start <= self.t + 1:
            raise RuntimeError(f"window start {start} outside retained history 1..{self.t}")
        arms, rewards, counts, sums = self.arms, self.rewards, self.counts, self.sums
        while self.start < start:
            j = arms[self.start - 1] - 1
            counts[j] -= 1
            sums[j] -= rewards[self.start - 1]
            self.start += 1
        while self.start > start:
            self.start -= 1
            j = arms[self.start - 1] - 1
            counts[j] += 1
            sums[j] += rewards[self.start - 1]

    def mean(self, arm: int) -> float:
        n = self.counts[arm - 1]
        return self.sums[arm - 1] / n if n else math.nan


def window_stats(state: SlidingWindowStats, t: int, alpha: float, lam: float) -> list[tuple[int, float]]:
    """``(n_j(t, alpha), rbar_j(t, alpha))`` per arm; the mean is nan when ``n_j = 0``."""
    if t != state.t:
        raise RuntimeError(f"statistics requested at t={t} but history ends at {state.t}")
    state.slide(t - swucb_window(t, alpha, lam) + 1)
    return [(state.counts[j], state.mean(j + 1)) for j in range(state.n_arms)]


def swucbsharp_select(state: SlidingWindowStats, params: SwUcbSharpParams) -> int:
    """Next arm given history through step ``state.t``."""
    t = state.t + 1
    n_arms = params.n_arms
    if t <= n_arms:
        return t
    s = t - 1
    state.slide(s - swucb_window(s, params.alpha, params.lam) + 1)
    counts, sums = state.counts, state.sums
    best_arm = 0
    best = -math.inf
    scale = (1.0 + params.alpha) * math.log(s)
    for j in range(n_arms):
        n = counts[j]
        if n == 0:
            # unseen inside the window: infinite index, lowest such arm wins
            return j + 1
        v = sums[j] / n + math.sqrt(scale / n)
        if v > best:
            best = v
            best_arm = j + 1
    return best_arm


class SwUcbSharp(Policy):
    def __init__(self, params: SwUcbSharpParams):
        super().__init__(params.n_arms)
        self.params = params
        self.state = SlidingWindowStats(params.n_arms)

    def select(self) -> int:
        arm = swucbsharp_select(self.state, self.params)
        self._emitted = arm
        return arm

    def _observe(self, arm: int, reward: float) -> None:
        self.state.push(arm, reward)
