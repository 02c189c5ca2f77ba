"""Limited-memory deterministic sequencing of exploration and exploitation.

Epoch ``k`` lasts ``ceil(a k^rho l)`` steps: every arm is pulled ``L(k)`` times
in consecutive blocks, then the arm with the best sample mean *from this
epoch's exploration only* is pulled for the rest of the epoch.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ..env import ConfigError
from .base import Policy

log = logging.getLogger(__name__)

L_SEARCH_CAP = 10**9

EXPLORE = "explore"
EXPLOIT = "exploit"


@dataclass(frozen=True)
class LmDseeParams:
    """Tuning of LM-DSEE.

    ``gamma`` is the fixed exploration constant; ``None`` selects the
    slowly-varying rule ``gamma_k = 2 (k^rho l)^(2/3)``.
    """

    n_arms: int
    rho: float
    a: float
    b: float
    l: int
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.n_arms < 1:
            raise ConfigError("n_arms must be positive")
        if self.rho < 0:
            raise ConfigError("rho must be non-negative")
        if not self.a > 0:
            raise ConfigError("a must be positive")
        if not 0 < self.b <= 1:
            raise ConfigError("b must be in (0, 1]")
        if self.l < 1:
            raise ConfigError("l must be a positive integer")
        if self.gamma is not None and not self.gamma > 0:
            raise ConfigError("gamma must be positive")

    @property
    def slow_rule(self) -> bool:
        return self.gamma is None


def _gamma_k(k: int, rho: float, l: float, gamma: Optional[float]) -> float:
    if gamma is not None:
        return gamma
    return 2.0 * (k**rho * l) ** (2.0 / 3.0)


def _raw_exploration_length(k: int, rho: float, l: float, b: float, gamma: Optional[float]) -> int:
    return math.ceil(_gamma_k(k, rho, l, gamma) * math.log(k**rho * l * b))


def exploration_length(k: int, params: LmDseeParams) -> int:
    """Per-arm pulls ``L(k) = ceil(gamma_k ln(k^rho l b))`` in epoch ``k``."""
    if k < 1:
        raise ValueError("epoch index starts at 1")
    L = _raw_exploration_length(k, params.rho, params.l, params.b, params.gamma)
    if L < 1:
        raise ConfigError(f"L({k}) = {L} < 1; l*b = {params.l * params.b} is too small")
    return L


def epoch_length(k: int, params: LmDseeParams) -> int:
    if k < 1:
        raise ValueError("epoch index starts at 1")
    return math.ceil(params.a * k**params.rho * params.l)


def exploitation_length(k: int, params: LmDseeParams) -> int:
    """``ceil(a k^rho l) - N L(k)``, clamped at zero with a warning."""
    n = epoch_length(k, params) - params.n_arms * exploration_length(k, params)
    if n < 0:
        log.warning("LM-DSEE epoch %d: exploration exceeds epoch length by %d steps; exploitation skipped", k, -n)
        return 0
    return n


def l_condition(l: int, n_arms: int, a: float, b: float, gamma: Optional[float]) -> bool:
    """Whether ``l`` is admissible: ``L(1) >= 1`` and ``ceil(a l) - N L(1) >= N``."""
    if l < 2:
        return False
    L1 = _raw_exploration_length(1, 0.0, l, b, gamma)
    return L1 >= 1 and math.ceil(a * l) - n_arms * L1 >= n_arms


def _settled(l: int, n_arms: int, a: float, b: float, gamma: Optional[float]) -> bool:
    """Whether the inequality provably holds for every integer ``l' >= l``.

    Uses ``ceil(y) < y + 1`` to get the smooth lower bound
    ``g(x) = a x - N (gamma(x) ln(x b) + 1)`` and checks ``g(l) >= N`` with
    ``g`` non-decreasing from ``l`` on.
    """
    lb = l * b
    if lb <= 1.0:
        return False
    if gamma is None:
        # g'(x) = a - N x^(-1/3) (4/3 ln(xb) + 2); the subtracted term decreases once ln(xb) >= 3/2
        if math.log(lb) < 1.5 or a < n_arms * l ** (-1.0 / 3.0) * (4.0 / 3.0 * math.log(lb) + 2.0):
            return False
        g_l = 2.0 * l ** (2.0 / 3.0)
    else:
        # g'(x) = a - N gamma / x
        if a * l < n_arms * gamma:
            return False
        g_l = gamma
    return a * l - n_arms * (g_l * math.log(lb) + 1.0) >= n_arms


def choose_l(n_arms: int, a: float, b: float, gamma: Optional[float], cap: int = L_SEARCH_CAP) -> int:
    """Smallest epoch scale ``l >= 2`` from which :func:`l_condition` holds for all larger values.

    For the slowly-varying rule the inequality also holds at a few tiny ``l``
    (``l^(2/3) ln l`` is small there) before failing again; those isolated
    solutions make later epochs all exploration, so they are skipped.
    """
    last_fail = 1
    chunk = 1 << 16
    start = 2
    while start <= cap:
        stop = min(start + chunk, cap + 1)
        ls = np.arange(start, stop, dtype=np.float64)
        g = 2.0 * ls ** (2.0 / 3.0) if gamma is None else gamma
        with np.errstate(divide="ignore", invalid="ignore"):
            y = g * np.log(ls * b)
        # bracket both ceilings (y <= ceil(y) < y + 1); only entries the
        # bracket cannot decide get the exact scalar check
        passes = (y > 1e-6) & (a * ls - n_arms * (y + 1.0) >= n_arms + 1e-6)
        fails = (y < -1e-6) | (a * ls + 1.0 - n_arms * y <= n_arms - 1e-6)
        sure_fail = np.flatnonzero(fails)
        if sure_fail.size:
            last_fail = max(last_fail, start + int(sure_fail[-1]))
        for idx in np.flatnonzero(~(passes | fails)):
            l = start + int(idx)
            if l > last_fail and not l_condition(l, n_arms, a, b, gamma):
                last_fail = l
        # settledness is upward-closed, so checking the chunk's last value suffices
        if _settled(stop - 1, n_arms, a, b, gamma):
            return last_fail + 1
        start = stop
    raise ConfigError(f"no admissible l below {cap} for N={n_arms}, a={a}, b={b}")


def lmdsee_configure_abrupt(
    n_arms: int, nu: float, delta_min: float, a: float = 1.0, b: float = 0.25
) -> LmDseeParams:
    if not 0 <= nu < 1:
        raise ConfigError("nu must be in [0, 1)")
    if not 0 < delta_min < 1:
        raise ConfigError("delta_min must be in (0, 1)")
    gamma = 2.0 / delta_min**2
    rho = (1.0 - nu) / (1.0 + nu)
    return LmDseeParams(n_arms, rho, a, b, choose_l(n_arms, a, b, gamma), gamma)


def lmdsee_configure_slow(
    n_arms: int, kappa: float, kappa_max: float = 1.0, a: float = 20.0, b: float = 1.0
) -> LmDseeParams:
    if not kappa > 0:
        raise ConfigError("kappa must be positive")
    if not 0 < kappa_max < 4.0 / 3.0:
        raise ConfigError("kappa_max must be in (0, 4/3)")
    kt = min(kappa, kappa_max)
    rho = 3.0 * kt / (4.0 - 3.0 * kt)
    return LmDseeParams(n_arms, rho, a, b, choose_l(n_arms, a, b, None), None)


class Phase(NamedTuple):
    epoch: int
    phase: str
    t_start: int
    t_end: int


def lmdsee_trajectory(params: LmDseeParams, horizon: int) -> list[Phase]:
    """Phase boundaries over ``1..horizon``; the last phase is truncated.

    Zero-length exploitation blocks are omitted.
    """
    out = []
    t = 1
    k = 1
    while t <= horizon:
        explore = params.n_arms * exploration_length(k, params)
        exploit = exploitation_length(k, params)
        for name, length in ((EXPLORE, explore), (EXPLOIT, exploit)):
            if length == 0 or t > horizon:
                continue
            end = min(t + length - 1, horizon)
            out.append(Phase(k, name, t, end))
            t = end + 1
        k += 1
    return out


class LmDsee(Policy):
    """Step-wise LM-DSEE driver; arms are 1-based."""

    def __init__(self, params: LmDseeParams):
        super().__init__(params.n_arms)
        self.params = params
        self.epoch = 0
        self._start_epoch(1)

    def _start_epoch(self, k: int) -> None:
        self.epoch = k
        self.phase = EXPLORE
        self.position = 0
        self.L = exploration_length(k, self.params)
        self.exploit_length = exploitation_length(k, self.params)
        self.sums = [0.0] * self.n_arms
        self.counts = [0] * self.n_arms
        self.exploit_arm: Optional[int] = None

    def select(self) -> int:
        if self.phase == EXPLORE:
            arm = self.position // self.L + 1
        else:
            arm = self.exploit_arm
        self._emitted = arm
        return arm

    def _observe(self, arm: int, reward: float) -> None:
        self.position += 1
        if self.phase == EXPLORE:
            self.sums[arm - 1] += reward
            self.counts[arm - 1] += 1
            if self.position == self.n_arms * self.L:
                means = [s / c for s, c in zip(self.sums, self.counts)]
                self.exploit_arm = means.index(max(means)) + 1
                self.phase = EXPLOIT
                self.position = 0
                if self.exploit_length == 0:
                    self._start_epoch(self.epoch + 1)
        elif self.position == self.exploit_length:
            self._start_epoch(self.epoch + 1)

    def epoch_means(self) -> list[float]:
        """Sample means of the current epoch's exploration rewards (nan if unseen)."""
        return [s / c if c else math.nan for s, c in zip(self.sums, self.counts)]
