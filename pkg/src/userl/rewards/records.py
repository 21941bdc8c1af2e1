"""Trajectory-level data carriers for reward shaping and advantage export.

A trajectory is the unit everything downstream consumes: turn records in
order, each holding the post-processed reward and the token count of the
assistant turn that produced it. Token counts normally come from the
policy endpoint's usage report; when the report is missing we estimate by
whitespace splitting and mark the record so provenance stays honest.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from userl.envs.types import StepChoice, Verb


class TerminationReason(str, Enum):
    GOAL = "goal"
    BUDGET = "budget"
    ABORTED = "aborted"


class TurnScheme(str, Enum):
    NAIVE = "naive"
    EQUALIZED = "equalized"
    R2G = "r2g"
    EM = "em"


class TrajScheme(str, Enum):
    SUM = "sum"
    R2G = "r2g"


@dataclass
class TurnRecord:
    """One agent turn: the choice made, what came back, and its cost."""

    turn_index: int  # 1-based
    choice: StepChoice
    observation: str
    raw_reward: float
    token_count: int = 1
    token_count_estimated: bool = False
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.turn_index < 1:
            raise ValueError("turn_index is 1-based")
        if self.token_count < 1:
            raise ValueError("token_count must be >= 1")
        if not math.isfinite(self.raw_reward):
            raise ValueError("raw_reward must be finite")

    def to_dict(self) -> dict:
        return {
            "turn_index": self.turn_index,
            "verb": self.choice.verb.value,
            "content": self.choice.content,
            "observation": self.observation,
            "raw_reward": self.raw_reward,
            "token_count": self.token_count,
            "token_count_estimated": self.token_count_estimated,
            "info": self.info,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TurnRecord":
        return cls(
            turn_index=d["turn_index"],
            choice=StepChoice(Verb(d["verb"]), d["content"]),
            observation=d["observation"],
            raw_reward=d["raw_reward"],
            token_count=d.get("token_count", 1),
            token_count_estimated=d.get("token_count_estimated", False),
            info=d.get("info", {}),
        )


@dataclass
class Trajectory:
    task_id: str
    turns: list[TurnRecord]
    terminated_reason: TerminationReason

    def __post_init__(self):
        self.terminated_reason = TerminationReason(self.terminated_reason)
        # An episode aborted before any valid tool call consumed a step is the
        # one legal source of an empty trajectory.
        if not self.turns and self.terminated_reason is not TerminationReason.ABORTED:
            raise ValueError("trajectory must contain at least one turn")
        for i, turn in enumerate(self.turns, start=1):
            if turn.turn_index != i:
                raise ValueError("turn_index values must be 1..T contiguous")

    @property
    def rewards(self) -> list[float]:
        return [t.raw_reward for t in self.turns]

    @property
    def token_counts(self) -> list[int]:
        return [t.token_count for t in self.turns]

    def reward_sum(self) -> float:
        return sum(self.rewards)

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "terminated_reason": self.terminated_reason.value,
            "turns": [t.to_dict() for t in self.turns],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        return cls(
            task_id=d["task_id"],
            turns=[TurnRecord.from_dict(t) for t in d["turns"]],
            terminated_reason=TerminationReason(d["terminated_reason"]),
        )


@dataclass
class ShapingSpec:
    """Which shaping/scoring schemes to apply, plus their parameters."""

    turn_scheme: TurnScheme = TurnScheme.EQUALIZED
    traj_scheme: TrajScheme = TrajScheme.R2G
    gamma: float = 0.8
    k: float = 2.0
    eta: float = 1e-6

    def __post_init__(self):
        self.turn_scheme = TurnScheme(self.turn_scheme)
        self.traj_scheme = TrajScheme(self.traj_scheme)
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.eta <= 0:
            raise ValueError("eta must be positive")


@dataclass
class RolloutGroup:
    """All rollouts of one task; the unit of advantage normalization."""

    task_id: str
    trajectories: list[Trajectory]
    group_mean: float | None = None
    group_std: float | None = None

    def __post_init__(self):
        for traj in self.trajectories:
            if traj.task_id != self.task_id:
                raise ValueError("all trajectories in a group must share task_id")

    def __len__(self) -> int:
        return len(self.trajectories)

    @property
    def aborted(self) -> bool:
        return any(
            t.terminated_reason is TerminationReason.ABORTED for t in self.trajectories
        )


@dataclass
class AdvantageTensor:
    """Per-trajectory shaped rewards, turn advantages, and token broadcast."""

    task_id: str
    trajectory_index: int
    turn_rewards: list[float]
    shaped_rewards: list[float]
    trajectory_score: float
    per_turn_advantages: list[float]
    token_counts: list[int]
    token_advantages: list[float]

    def to_record(self) -> dict:
        """Export record consumed by external trainers (token broadcast
        is reconstructible from per-turn values, so it is not exported)."""
        return {
            "task_id": self.task_id,
            "trajectory_index": self.trajectory_index,
            "turn_rewards": self.turn_rewards,
            "shaped_rewards": self.shaped_rewards,
            "trajectory_score": self.trajectory_score,
            "per_turn_advantages": self.per_turn_advantages,
            "token_counts": self.token_counts,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_record())


def write_advantage_jsonl(tensors: Iterable[AdvantageTensor], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in tensors:
            fh.write(t.to_json_line() + "\n")
