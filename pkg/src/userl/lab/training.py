"""Clipped-surrogate training of the tabular policy on the chain gym.

The advantage signal comes from the same shaping/grouping pipeline the LLM
rollouts use; each sampled action counts as one token, so length
normalization and token broadcast stay on the live path. One ascent step
per batch, no inner epochs, no KL term.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..envs.types import StepChoice, Verb
from ..errors import NonFiniteGradient
from ..rewards.records import (
    RolloutGroup,
    ShapingSpec,
    TerminationReason,
    Trajectory,
    TurnRecord,
)
from ..rewards.shaping import group_advantages
from .chain_gym import ACTIONS, ChainGym
from .policy import TabularPolicy

CHAIN_TASK_ID = "chain-lab"


def sample_trajectory(policy: TabularPolicy, gym: ChainGym,
                      rng: np.random.Generator) -> Trajectory:
    state = gym.reset()
    turns: list[TurnRecord] = []
    solved = False
    while not state.done:
        turn_index = state.turn  # 0-based state the policy conditions on
        action_index, prob = policy.sample_action(turn_index, rng)
        action = ACTIONS[action_index]
        reward = gym.step(state, action)
        solved = solved or (action == "solve" and reward > 0)
        turns.append(TurnRecord(
            turn_index=len(turns) + 1,
            choice=StepChoice(Verb.ACTION, action),
            observation="",
            raw_reward=reward,
            token_count=1,
            info={"action_index": action_index, "old_prob": prob},
        ))
    reason = TerminationReason.GOAL if solved else TerminationReason.BUDGET
    return Trajectory(task_id=CHAIN_TASK_ID, turns=turns, terminated_reason=reason)


def sample_group(policy: TabularPolicy, gym: ChainGym, n: int,
                 seed: int) -> RolloutGroup:
    """n trajectories with recorded old-policy probabilities, seeded."""
    if n < 2:
        raise ValueError("a group needs n >= 2 trajectories")
    rng = np.random.default_rng(seed)
    trajectories = [sample_trajectory(policy, gym, rng) for _ in range(n)]
    return RolloutGroup(task_id=CHAIN_TASK_ID, trajectories=trajectories)


def surrogate_term(rho: float, advantage: float, epsilon: float) -> float:
    """min(rho * A, clip(rho, 1-eps, 1+eps) * A); pure, total on finite input."""
    clipped = min(max(rho, 1.0 - epsilon), 1.0 + epsilon)
    return min(rho * advantage, clipped * advantage)


@dataclass
class UpdateBatch:
    """Advantage-annotated groups plus the optimizer knobs. Ratios are taken
    against the probabilities recorded at sampling time, never recomputed."""

    groups: list[RolloutGroup]
    advantages: list[list]  # one AdvantageTensor list per group
    epsilon: float = 0.2
    learning_rate: float = 1.0


def build_batch(groups: list[RolloutGroup], spec: ShapingSpec,
                epsilon: float = 0.2, learning_rate: float = 1.0) -> UpdateBatch:
    return UpdateBatch(
        groups=groups,
        advantages=[group_advantages(group, spec) for group in groups],
        epsilon=epsilon,
        learning_rate=learning_rate,
    )


def _batch_tokens(batch: UpdateBatch):
    """Yields (state, action, old_prob, advantage, token_count) per turn."""
    for group, tensors in zip(batch.groups, batch.advantages):
        for trajectory, tensor in zip(group.trajectories, tensors):
            for turn, advantage in zip(trajectory.turns,
                                       tensor.per_turn_advantages):
                yield (turn.turn_index - 1, turn.info["action_index"],
                       turn.info["old_prob"], advantage, turn.token_count)


def surrogate_objective(policy: TabularPolicy, batch: UpdateBatch) -> float:
    """Length-normalized mean of surrogate terms over every token."""
    total = 0.0
    tokens = 0
    for state, action, old_prob, advantage, count in _batch_tokens(batch):
        prob = float(policy.action_probabilities(state)[action])
        total += surrogate_term(prob / old_prob, advantage, batch.epsilon) * count
        tokens += count
    return total / tokens if tokens else 0.0


def surrogate_gradient(policy: TabularPolicy, batch: UpdateBatch) -> np.ndarray:
    """Analytic gradient of the surrogate objective wrt the policy logits.

    On the clipped flat region the term does not depend on rho, so its
    contribution is zero; elsewhere d(term)/d(rho) = A.
    """
    grad = np.zeros_like(policy.logits)
    tokens = 0
    for state, action, old_prob, advantage, count in _batch_tokens(batch):
        tokens += count
        probs = policy.action_probabilities(state)
        rho = float(probs[action]) / old_prob
        if advantage >= 0:
            active = rho <= 1.0 + batch.epsilon
        else:
            active = rho >= 1.0 - batch.epsilon
        if not active or advantage == 0:
            continue
        # d p_a / d logit_j = p_a (delta_aj - p_j) / temperature
        row = -probs[action] * probs
        row[action] += probs[action]
        grad[state] += (advantage * count / old_prob) * row / policy.temperature
    if tokens == 0:
        return grad
    return grad / tokens


def update_policy(policy: TabularPolicy,
                  batch: UpdateBatch) -> tuple[TabularPolicy, float]:
    """One ascent step; returns the policy and the pre-step objective."""
    objective = surrogate_objective(policy, batch)
    grad = surrogate_gradient(policy, batch)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradient("surrogate gradient has non-finite entries")
    policy.logits = policy.logits + batch.learning_rate * grad
    return policy, objective


@dataclass
class EpochStats:
    epoch: int
    mean_reward_sum: float
    solve_rate: float
    mean_turns: float
    objective: float


@dataclass
class TrainResult:
    policy: TabularPolicy
    history: list[EpochStats] = field(default_factory=list)

    @property
    def reward_curve(self) -> list[float]:
        return [h.mean_reward_sum for h in self.history]


def _solved(trajectory: Trajectory) -> bool:
    return trajectory.terminated_reason is TerminationReason.GOAL


def _turns_to_solve(trajectory: Trajectory) -> int:
    return len(trajectory.turns)


def train(spec: ShapingSpec, epochs: int, seed: int, group_size: int = 8,
          groups_per_epoch: int = 4, learning_rate: float = 1.0,
          epsilon: float = 0.2, horizon: int = 8) -> TrainResult:
    """Seeded training run; the curve reports raw reward sums per epoch."""
    gym = ChainGym(horizon=horizon)
    policy = TabularPolicy(horizon=horizon)
    result = TrainResult(policy=policy)
    for epoch in range(epochs):
        groups = [
            sample_group(policy, gym, group_size,
                         seed=seed * 1_000_003 + epoch * 131 + g)
            for g in range(groups_per_epoch)
        ]
        batch = build_batch(groups, spec, epsilon=epsilon,
                            learning_rate=learning_rate)
        try:
            policy, objective = update_policy(policy, batch)
        except NonFiniteGradient:
            # the step is abandoned, the run keeps going on the old policy
            objective = float("nan")
        sampled = [t for group in groups for t in group.trajectories]
        result.history.append(EpochStats(
            epoch=epoch,
            mean_reward_sum=float(np.mean([t.reward_sum() for t in sampled])),
            solve_rate=float(np.mean([_solved(t) for t in sampled])),
            mean_turns=float(np.mean([len(t.turns) for t in sampled])),
            objective=objective,
        ))
    result.policy = policy
    return result


@dataclass
class EvalStats:
    solve_rate: float
    mean_turns_to_solve: float
    mean_reward_sum: float


def evaluate(policy: TabularPolicy, episodes: int = 256, seed: int = 0,
             horizon: int = 8) -> EvalStats:
    """Stochastic evaluation of a trained policy."""
    gym = ChainGym(horizon=horizon)
    rng = np.random.default_rng(seed)
    trajectories = [sample_trajectory(policy, gym, rng) for _ in range(episodes)]
    solved = [t for t in trajectories if _solved(t)]
    return EvalStats(
        solve_rate=len(solved) / episodes,
        mean_turns_to_solve=(float(np.mean([_turns_to_solve(t) for t in solved]))
                             if solved else float(gym.horizon)),
        mean_reward_sum=float(np.mean([t.reward_sum() for t in trajectories])),
    )
