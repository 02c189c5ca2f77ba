"""Regret traces, Monte-Carlo aggregation and bound-ratio curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import MeanMatrix, oracle_best

# regret-order families and the exponent each one uses
BOUND_TAGS = ("abrupt", "slow-lmdsee", "slow-swucb")


@dataclass(frozen=True)
class RegretTrace:
    instant: np.ndarray
    cumulative: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.instant)

    @property
    def final(self) -> float:
        return float(self.cumulative[-1]) if len(self.cumulative) else 0.0


@dataclass(frozen=True)
class AggregateTrace:
    replications: int
    mean: np.ndarray
    std: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.mean)


@dataclass(frozen=True)
class BoundCurve:
    tag: str
    exponent: float
    t: np.ndarray
    values: np.ndarray


def instantaneous_regret(mm: MeanMatrix, t: int, arm: int) -> float:
    _, best = oracle_best(mm, t)
    return best - mm.mean(arm, t)


def cumulative(instant) -> np.ndarray:
    """Prefix sums, accumulated strictly left to right."""
    return np.cumsum(np.asarray(instant, dtype=np.float64))


def regret_trace(mm: MeanMatrix, arms) -> RegretTrace:
    """Trace of a run that pulled ``arms[t-1]`` (1-based) at each step ``t``."""
    arms = np.asarray(arms, dtype=np.int64)
    if arms.shape != (mm.horizon,):
        raise ValueError(f"expected {mm.horizon} pulls, got {arms.shape}")
    if arms.size and (arms.min() < 1 or arms.max() > mm.arm_count):
        raise IndexError("arm index out of range")
    cols = np.arange(mm.horizon)
    instant = mm.best_means() - mm.means[arms - 1, cols]
    return RegretTrace(instant, cumulative(instant))


def aggregate(traces) -> AggregateTrace:
    """Pointwise mean and sample std of ``R(t)`` across replications.

    Values are sorted per time step before summation, so the result does not
    depend on the order of ``traces``.
    """
    traces = list(traces)
    if not traces:
        raise ValueError("no traces to aggregate")
    horizons = {tr.horizon for tr in traces}
    if len(horizons) != 1:
        raise ValueError(f"mismatched horizons {sorted(horizons)}")
    stack = np.sort(np.stack([tr.cumulative for tr in traces]), axis=0)
    m = len(traces)
    mean = _rowsum(stack) / m
    if m < 2:
        std = np.zeros_like(mean)
    else:
        dev = np.sort((stack - mean) ** 2, axis=0)
        std = np.sqrt(_rowsum(dev) / (m - 1))
    return AggregateTrace(m, mean, std)


def _rowsum(stack: np.ndarray) -> np.ndarray:
    out = np.zeros(stack.shape[1])
    for row in stack:
        out += row
    return out


def bound_exponent(tag: str, *, nu: float | None = None, rho: float | None = None, alpha: float | None = None) -> float:
    if tag == "abrupt":
        return (1.0 + nu) / 2.0
    if tag == "slow-lmdsee":
        return (3.0 + 2.0 * rho) / (3.0 + 3.0 * rho)
    if tag == "slow-swucb":
        return 1.0 - alpha / 3.0
    raise ValueError(f"unknown bound tag {tag!r}; expected one of {BOUND_TAGS}")


def bound_ratio_values(mean: np.ndarray, exponent: float) -> np.ndarray:
    """``R(t) / (t^e ln t)`` for ``t = 2..T``."""
    t = np.arange(2, len(mean) + 1, dtype=np.float64)
    return mean[1:] / (t**exponent * np.log(t))


def bound_ratio(agg: AggregateTrace, tag: str, **tuning) -> BoundCurve:
    e = bound_exponent(tag, **tuning)
    t = np.arange(2, agg.horizon + 1)
    return BoundCurve(tag, e, t, bound_ratio_values(agg.mean, e))


def trend_slope(t: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of ``y`` against ``t``."""
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    tc = t - t.mean()
    return float(np.dot(tc, y - y.mean()) / np.dot(tc, tc))
