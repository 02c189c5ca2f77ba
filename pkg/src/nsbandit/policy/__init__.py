from .base import Policy, ProtocolError, StepFeedback
from .baselines import Dsee, RandomPolicy, Ucb, dsee_baseline_step, dsee_threshold, ucb_select
from .lmdsee import (
    EXPLOIT,
    EXPLORE,
    LmDsee,
    LmDseeParams,
    Phase,
    choose_l,
    epoch_length,
    exploitation_length,
    exploration_length,
    l_condition,
    lmdsee_configure_abrupt,
    lmdsee_configure_slow,
    lmdsee_trajectory,
)
from .swucb import (
    SlidingWindowStats,
    SwUcbSharp,
    SwUcbSharpParams,
    alpha_abrupt,
    alpha_slow,
    confidence_radius,
    swucb_window,
    swucbsharp_select,
    window_stats,
)


def lmdsee_step(policy: LmDsee, feedback: StepFeedback | None = None) -> int:
    return policy.step(feedback)
