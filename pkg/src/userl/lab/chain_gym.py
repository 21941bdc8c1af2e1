"""Minimal deterministic gym isolating early-progress credit assignment.

Four actions over a fixed horizon: `unlock` arms the goal, `solve` ends the
episode and pays 1.0 only when armed, `probe` pays 0.1 for the first two
uses, `noop` does nothing. The best possible trajectory therefore sums to
1.2, and solving sooner is strictly better under discounted scoring while
being indistinguishable under plain summation.
"""
from __future__ import annotations

from dataclasses import dataclass

ACTIONS = ("probe", "unlock", "solve", "noop")
DEFAULT_HORIZON = 8
PROBE_REWARD = 0.1
MAX_PAID_PROBES = 2
SOLVE_REWARD = 1.0
MAX_TRAJECTORY_SUM = PROBE_REWARD * MAX_PAID_PROBES + SOLVE_REWARD


@dataclass
class ChainState:
    turn: int = 0
    unlocked: bool = False
    probes_paid: int = 0
    done: bool = False


class ChainGym:
    """Deterministic transitions; episodes end on `solve` or at the horizon."""

    def __init__(self, horizon: int = DEFAULT_HORIZON):
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        self.horizon = horizon

    def reset(self) -> ChainState:
        return ChainState()

    def step(self, state: ChainState, action: str) -> float:
        if state.done:
            raise RuntimeError("episode already ended")
        if action not in ACTIONS:
            raise ValueError(f"unknown action {action!r}")
        reward = 0.0
        if action == "probe" and state.probes_paid < MAX_PAID_PROBES:
            state.probes_paid += 1
            reward = PROBE_REWARD
        elif action == "unlock":
            state.unlocked = True
        elif action == "solve":
            reward = SOLVE_REWARD if state.unlocked else 0.0
            state.done = True
        state.turn += 1
        if state.turn >= self.horizon:
            state.done = True
        return reward
