"""Turn-level reward shaping, trajectory scoring, and grouped advantages.

All functions here are pure: raw turn rewards in, training signals out.
The pipeline is

    raw rewards --(turn scheme)--> shaped rewards r~_t
    raw rewards --(traj scheme)--> scalar trajectory score
    group of scores --> mean/std --> per-turn advantage (r~_t - mean)/(std + eta)
    per-turn advantage --(token counts)--> flat token-level broadcast

Four turn schemes:
  naive      r~_t = r_t
  equalized  r~_t = trajectory score (one constant per trajectory, so every
             token in the rollout carries the outcome signal)
  r2g        r~_t = sum_{j>=t} gamma^(j-t) r_j   (discounted suffix sums)
  em         r~_t = 0.5 + 0.5*(1 - exp(-k r_t))/(1 - exp(-k)), r_t in [0,1]

Two trajectory schemes:
  sum        sum_t r_t
  r2g        sum_j gamma^(j-1) r_j   (early rewards count for more)

Group statistics use the population standard deviation (divisor n).
"""

from __future__ import annotations

import math

from userl.errors import DomainError, GroupTooSmall, LengthMismatch
from userl.rewards.records import (
    AdvantageTensor,
    RolloutGroup,
    ShapingSpec,
    TrajScheme,
    TurnScheme,
)


def em_map(reward: float, k: float) -> float:
    """Exponential map of a [0,1] reward into [0.5,1]; strictly increasing,
    fixing 0 -> 0.5 and 1 -> 1.0 for every k > 0."""
    if not 0.0 <= reward <= 1.0:
        raise DomainError(f"em input must lie in [0,1], got {reward}")
    return 0.5 + 0.5 * (1.0 - math.exp(-k * reward)) / (1.0 - math.exp(-k))


def reward_to_go(rewards: list[float], gamma: float) -> list[float]:
    """Discounted suffix sums, computed by backward recursion."""
    out = [0.0] * len(rewards)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def shape_turn_rewards(
    spec: ShapingSpec, rewards: list[float], trajectory_score: float
) -> list[float]:
    """Map raw turn rewards to the per-turn training signal r~_t.

    The equalized scheme broadcasts the trajectory's own score to every
    turn, so the caller must pass the score computed under spec.traj_scheme.
    """
    if not rewards:
        raise ValueError("rewards must be non-empty")
    scheme = spec.turn_scheme
    if scheme is TurnScheme.NAIVE:
        return list(rewards)
    if scheme is TurnScheme.EQUALIZED:
        return [trajectory_score] * len(rewards)
    if scheme is TurnScheme.R2G:
        return reward_to_go(rewards, spec.gamma)
    if scheme is TurnScheme.EM:
        return [em_map(r, spec.k) for r in rewards]
    raise ValueError(f"unknown turn scheme {scheme!r}")


def score_trajectory(spec: ShapingSpec, rewards: list[float]) -> float:
    """Scalar trajectory score used for group normalization."""
    if not rewards:
        raise ValueError("rewards must be non-empty")
    if spec.traj_scheme is TrajScheme.SUM:
        return sum(rewards)
    if spec.traj_scheme is TrajScheme.R2G:
        total = 0.0
        discount = 1.0
        for r in rewards:
            total += discount * r
            discount *= spec.gamma
        return total
    raise ValueError(f"unknown trajectory scheme {spec.traj_scheme!r}")


def broadcast_to_tokens(
    per_turn_advantages: list[float], token_counts: list[int]
) -> list[float]:
    """Repeat each turn's advantage once per token generated in that turn."""
    if len(per_turn_advantages) != len(token_counts):
        raise LengthMismatch(
            f"{len(per_turn_advantages)} advantages vs {len(token_counts)} token counts"
        )
    flat: list[float] = []
    for adv, count in zip(per_turn_advantages, token_counts):
        if count < 1:
            raise ValueError("token counts must be positive")
        flat.extend([adv] * count)
    return flat


def group_advantages(group: RolloutGroup, spec: ShapingSpec) -> list[AdvantageTensor]:
    """Normalize every trajectory's shaped rewards against the group.

    Trajectory scores give the group mean and population std; each turn's
    advantage is (r~_t - mean)/(std + eta) and is broadcast to the turn's
    tokens. The group's mean/std fields are filled in as a side effect.
    """
    n = len(group)
    if n < 2:
        raise GroupTooSmall(f"need >= 2 trajectories, got {n}")

    # Aborted-before-any-step trajectories carry no rewards and score 0.
    scores = [score_trajectory(spec, traj.rewards) if traj.rewards else 0.0
              for traj in group.trajectories]
    mean = sum(scores) / n
    variance = sum((s - mean) ** 2 for s in scores) / n
    std = math.sqrt(variance)
    group.group_mean = mean
    group.group_std = std

    denom = std + spec.eta
    tensors: list[AdvantageTensor] = []
    for index, (traj, score) in enumerate(zip(group.trajectories, scores)):
        shaped = shape_turn_rewards(spec, traj.rewards, score) if traj.rewards else []
        per_turn = [(value - mean) / denom for value in shaped]
        tensors.append(
            AdvantageTensor(
                task_id=group.task_id,
                trajectory_index=index,
                turn_rewards=traj.rewards,
                shaped_rewards=shaped,
                trajectory_score=score,
                per_turn_advantages=per_turn,
                token_counts=traj.token_counts,
                token_advantages=broadcast_to_tokens(per_turn, traj.token_counts),
            )
        )
    return tensors
