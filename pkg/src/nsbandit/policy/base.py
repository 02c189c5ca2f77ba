from __future__ import annotations

from typing import NamedTuple, Optional


class ProtocolError(RuntimeError):
    """Feedback that does not match the arm the policy last emitted."""


class StepFeedback(NamedTuple):
    arm: int
    reward: float


class Policy:
    """Select/update protocol shared by every policy.

    ``select()`` returns the next arm (1-based); ``update(arm, reward)`` must
    follow with that same arm before the next ``select()``.
    """

    def __init__(self, n_arms: int):
        if n_arms < 1:
            raise ValueError("n_arms must be positive")
        self.n_arms = n_arms
        self._emitted: Optional[int] = None

    def select(self) -> int:
        raise NotImplementedError

    def update(self, arm: int, reward: float) -> None:
        if self._emitted is None or arm != self._emitted:
            raise ProtocolError(f"feedback for arm {arm} but last emitted arm was {self._emitted}")
        if not 0.0 <= reward <= 1.0:
            raise ProtocolError(f"reward {reward} outside [0, 1]")
        self._emitted = None
        self._observe(arm, reward)

    def _observe(self, arm: int, reward: float) -> None:
        raise NotImplementedError

    def step(self, feedback: Optional[StepFeedback] = None) -> int:
        """Apply the previous step's feedback (if any) and return the next arm."""
        if feedback is not None:
            self.update(feedback.arm, feedback.reward)
        elif self._emitted is not None:
            raise ProtocolError("feedback missing for the previously emitted arm")
        return self.select()
