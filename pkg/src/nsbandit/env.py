"""Non-stationary environments: ground-truth mean trajectories and Beta rewards.

Arms and time steps are 1-based at the public surface (arm ``j`` in ``1..N``,
time ``t`` in ``1..T``); the backing array is 0-based with shape ``(N, T)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

# Mean-reward set used for the abruptly-changing experiments.
DEFAULT_MEAN_SET: tuple[float, ...] = (0.05, 0.12, 0.19, 0.26, 0.33, 0.39, 0.46, 0.53, 0.6, 0.9)


class ConfigError(ValueError):
    """Invalid environment or policy configuration."""


@dataclass(frozen=True)
class MeanMatrix:
    """Immutable table of true means ``mu_j(t)``; ``means[j-1, t-1]``."""

    means: np.ndarray

    def __post_init__(self):
        arr = np.array(self.means, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ConfigError(f"means must be a non-empty 2-D table, got shape {arr.shape}")
        if not np.all((arr >= 0.0) & (arr <= 1.0)):
            raise ConfigError("means must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "means", arr)

    @property
    def arm_count(self) -> int:
        return self.means.shape[0]

    @property
    def horizon(self) -> int:
        return self.means.shape[1]

    def mean(self, arm: int, t: int) -> float:
        self._check(arm, t)
        return float(self.means[arm - 1, t - 1])

    def column(self, t: int) -> np.ndarray:
        self._check(1, t)
        return self.means[:, t - 1]

    def best_means(self) -> np.ndarray:
        """``mu_{j*_t}(t)`` for every t, as a length-T array."""
        return self.means.max(axis=0)

    def best_arms(self) -> np.ndarray:
        """1-based oracle arm per step (lowest index on ties)."""
        return self.means.argmax(axis=0) + 1

    def _check(self, arm: int, t: int) -> None:
        if not 1 <= arm <= self.arm_count:
            raise IndexError(f"arm {arm} outside 1..{self.arm_count}")
        if not 1 <= t <= self.horizon:
            raise IndexError(f"time {t} outside 1..{self.horizon}")


@dataclass(frozen=True)
class AbruptConfig:
    nu: float
    horizon: int
    arm_count: int
    mean_set: tuple[float, ...] = DEFAULT_MEAN_SET

    def __post_init__(self):
        object.__setattr__(self, "mean_set", tuple(float(m) for m in self.mean_set))
        if not 0.0 <= self.nu < 1.0:
            raise ConfigError(f"nu must be in [0, 1), got {self.nu}")
        if self.horizon < 1 or self.arm_count < 1:
            raise ConfigError("horizon and arm_count must be positive")
        if len(set(self.mean_set)) != len(self.mean_set):
            raise ConfigError("mean_set entries must be distinct")
        if any(not 0.0 < m < 1.0 for m in self.mean_set):
            raise ConfigError("mean_set entries must lie in (0, 1)")
        if len(self.mean_set) < self.arm_count:
            raise ConfigError(
                f"mean_set has {len(self.mean_set)} values but {self.arm_count} arms need distinct means"
            )


@dataclass(frozen=True)
class SlowConfig:
    kappa: float
    horizon: int
    arm_count: int
    init_low: float = 0.1
    init_high: float = 0.9

    def __post_init__(self):
        if not self.kappa > 0:
            raise ConfigError(f"kappa must be positive, got {self.kappa}")
        if self.horizon < 1 or self.arm_count < 1:
            raise ConfigError("horizon and arm_count must be positive")
        if not 0.0 <= self.init_low < self.init_high <= 1.0:
            raise ConfigError("need 0 <= init_low < init_high <= 1")

    @property
    def drift_bound(self) -> float:
        """Largest allowed per-step change, ``2 T^-kappa``."""
        return 2.0 * float(self.horizon) ** (-self.kappa)


@dataclass(frozen=True)
class RewardModel:
    concentration: float = 4.0
    mean_clamp: float = 0.01

    def __post_init__(self):
        if not self.concentration > 0:
            raise ConfigError("concentration must be positive")
        if not 0.0 < self.mean_clamp < 0.5:
            raise ConfigError("mean_clamp must be in (0, 0.5)")

    def shaped_mean(self, mu):
        return np.clip(mu, self.mean_clamp, 1.0 - self.mean_clamp)


@dataclass(frozen=True)
class GapSummary:
    delta_j: np.ndarray = field(repr=False)
    delta_max: float
    delta_min: float


def _floor_pow(t: int, nu: float, exact: Fraction | None) -> int:
    """``floor(t**nu)``, settled with integer arithmetic when t**nu is near an integer."""
    x = t**nu
    k = math.floor(x)
    r = round(x)
    if exact is not None and abs(x - r) < 1e-9 * max(1.0, x):
        p, q = exact.numerator, exact.denominator
        # r <= t^(p/q)  <=>  r^q <= t^p
        k = r if r**q <= t**p else r - 1
    return k


def breakpoints(nu: float, horizon: int) -> list[int]:
    """Times ``t`` in ``2..T`` where ``floor(t**nu)`` differs from ``floor((t-1)**nu)``."""
    if horizon < 1:
        raise ConfigError("horizon must be positive")
    if nu == 0.0 or horizon < 2:
        return []
    frac = Fraction(nu).limit_denominator(10**4)
    exact = frac if abs(float(frac) - nu) < 1e-15 else None
    out = []
    prev = _floor_pow(1, nu, exact)
    # floor(t**nu) only moves when t crosses m**(1/nu); jump between candidates
    m = prev + 1
    while True:
        try:
            guess = max(2, math.ceil(m ** (1.0 / nu)) - 2)
        except OverflowError:
            break
        if guess > horizon:
            break
        t = guess
        while t > 2 and _floor_pow(t - 1, nu, exact) >= m:
            t -= 1
        while t <= horizon and _floor_pow(t, nu, exact) < m:
            t += 1
        if t > horizon:
            break
        out.append(t)
        m = _floor_pow(t, nu, exact) + 1
    return out


def _segments(horizon: int, bps: Sequence[int]) -> list[tuple[int, int]]:
    starts = [1, *bps]
    ends = [b - 1 for b in bps] + [horizon]
    return list(zip(starts, ends))


def gen_abrupt_means(cfg: AbruptConfig, rng: np.random.Generator) -> MeanMatrix:
    """Piecewise-constant means, redrawn without replacement from ``mean_set`` at t=1 and every breakpoint."""
    values = np.asarray(cfg.mean_set, dtype=np.float64)
    means = np.empty((cfg.arm_count, cfg.horizon))
    for start, end in _segments(cfg.horizon, breakpoints(cfg.nu, cfg.horizon)):
        draw = rng.permutation(len(values))[: cfg.arm_count]
        means[:, start - 1 : end] = values[draw][:, None]
    return MeanMatrix(means)


def gen_slow_means(cfg: SlowConfig, rng: np.random.Generator) -> MeanMatrix:
    """Random-walk means with uniform steps in ``[-2T^-kappa, 2T^-kappa]``, clipped to [0, 1]."""
    n, horizon = cfg.arm_count, cfg.horizon
    eps = cfg.drift_bound
    means = np.empty((n, horizon))
    means[:, 0] = rng.uniform(cfg.init_low, cfg.init_high, size=n)
    steps = rng.uniform(-eps, eps, size=(n, horizon - 1))
    for j in range(n):
        means[j] = _clipped_walk(means[j, 0], steps[j])
    return MeanMatrix(means)


def _clipped_walk(start: float, steps: np.ndarray) -> np.ndarray:
    # cumsum over [start, steps...] performs the same left-to-right additions as
    # the step loop, so it is exact until the walk first leaves [0, 1]
    path = np.cumsum(np.concatenate(([start], steps)))
    outside = np.flatnonzero((path < 0.0) | (path > 1.0))
    if outside.size == 0:
        return path
    vals = path.tolist()
    for t in range(int(outside[0]), len(vals)):
        vals[t] = min(1.0, max(0.0, vals[t - 1] + steps[t - 1]))
    return np.array(vals)


def sample_reward(mu: float, model: RewardModel, rng: np.random.Generator) -> float:
    m = float(model.shaped_mean(mu))
    c = model.concentration
    return float(rng.beta(c * m, c * (1.0 - m)))


def sample_rewards(mu: np.ndarray, model: RewardModel, rng: np.random.Generator) -> np.ndarray:
    """Vectorised :func:`sample_reward` over an array of means."""
    m = model.shaped_mean(np.asarray(mu, dtype=np.float64))
    c = model.concentration
    return rng.beta(c * m, c * (1.0 - m))


def oracle_best(mm: MeanMatrix, t: int) -> tuple[int, float]:
    col = mm.column(t)
    j = int(np.argmax(col))
    return j + 1, float(col[j])


def gap_summary(mm: MeanMatrix) -> GapSummary:
    if mm.arm_count < 2:
        raise ConfigError("gap summary needs at least two arms")
    mu = mm.means
    best = mu.max(axis=0)
    gaps = best[None, :] - mu
    delta_j = gaps.max(axis=1)
    # exclude exactly the oracle arm (lowest-index argmax) in each column
    masked = gaps.copy()
    masked[mu.argmax(axis=0), np.arange(mm.horizon)] = np.inf
    return GapSummary(
        delta_j=delta_j,
        delta_max=float(delta_j.max()),
        delta_min=float(masked.min()),
    )
