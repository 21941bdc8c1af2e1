"""Core session contract: tasks, choices, outcomes, and the step budget.

Every gym speaks this vocabulary. A session is an exclusive-access finite
automaton: TaskSpec and EnvConfig are frozen at reset, gym_state advances
only through step(), and the history list is the authoritative record of
what happened.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from userl.errors import SchemaError


class GymKind(str, Enum):
    FUNCTION = "function"
    TELEPATHY = "telepathy"
    TURTLE = "turtle"
    INTENTION = "intention"
    PERSUADE = "persuade"
    TRAVEL = "travel"
    SEARCH = "search"
    TAU_STUB = "tau_stub"


class Verb(str, Enum):
    ACTION = "action"
    SEARCH = "search"
    ANSWER = "answer"


# Allowed verb sets per gym, audited in one place rather than scattered
# through the gym implementations.
ALLOWED_VERBS: dict[GymKind, frozenset[Verb]] = {
    GymKind.FUNCTION: frozenset({Verb.ACTION, Verb.SEARCH, Verb.ANSWER}),
    GymKind.TELEPATHY: frozenset({Verb.ACTION, Verb.ANSWER}),
    GymKind.TURTLE: frozenset({Verb.ACTION, Verb.ANSWER}),
    GymKind.INTENTION: frozenset({Verb.ACTION}),
    GymKind.PERSUADE: frozenset({Verb.ACTION}),
    GymKind.TRAVEL: frozenset({Verb.ACTION, Verb.SEARCH, Verb.ANSWER}),
    GymKind.SEARCH: frozenset({Verb.SEARCH, Verb.ANSWER}),
    GymKind.TAU_STUB: frozenset({Verb.ACTION, Verb.SEARCH, Verb.ANSWER}),
}


@dataclass(frozen=True)
class TaskSpec:
    """One task instance: id, gym, and the gym-specific payload."""

    task_id: str
    gym_kind: GymKind
    payload: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "gym_kind", GymKind(self.gym_kind))
        if not self.task_id:
            raise SchemaError("task_id must be non-empty")

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "gym": self.gym_kind.value,
            "payload": self.payload,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TaskSpec":
        try:
            return cls(
                task_id=d["task_id"],
                gym_kind=GymKind(d["gym"]),
                payload=d["payload"],
                metadata=d.get("metadata", {}),
            )
        except (KeyError, ValueError) as exc:
            raise SchemaError(f"malformed task record: {exc}") from exc


@dataclass(frozen=True)
class StepChoice:
    verb: Verb
    content: str

    def __post_init__(self):
        object.__setattr__(self, "verb", Verb(self.verb))
        if not self.content:
            raise ValueError("choice content must be non-empty")


@dataclass
class StepOutcome:
    """Environment reply for one step. raw_reward is already post-processed
    through the scale / penalty / normalization pipeline."""

    observation: str
    raw_reward: float
    done: bool
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.raw_reward):
            raise ValueError("raw_reward must be finite")

    def to_dict(self) -> dict:
        return {
            "observation": self.observation,
            "raw_reward": self.raw_reward,
            "done": self.done,
            "info": self.info,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StepOutcome":
        return cls(d["observation"], d["raw_reward"], d["done"], d.get("info", {}))


@dataclass(frozen=True)
class EnvConfig:
    max_steps: int = 20
    reward_scale: float = 1.0
    step_penalty: float = 0.0
    normalize_to_unit: bool = False
    success_threshold: float = 0.9
    wrong_choice_penalty: float = 0.0  # travel answer misses

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.reward_scale <= 0:
            raise ValueError("reward_scale must be positive")
        if self.step_penalty < 0:
            raise ValueError("step_penalty must be non-negative")


def postprocess_reward(raw: float, config: EnvConfig, step_index: int) -> float:
    """Scale, penalize, and optionally clamp one turn's raw reward.

    Applied on every turn, reward-bearing or not; the step penalty is a
    flat per-turn charge. Pure and total on finite inputs.
    """
    if not math.isfinite(raw):
        raise ValueError("raw reward must be finite")
    if step_index < 1:
        raise ValueError("step_index is 1-based")
    value = raw * config.reward_scale - config.step_penalty
    if config.normalize_to_unit:
        value = min(1.0, max(0.0, value))
    return value


@dataclass
class EnvSession:
    """Exclusive-access automaton state for one running task.

    `user` and `backend` are live collaborators bound at reset; they are
    not part of the serializable automaton state.
    """

    task: TaskSpec
    config: EnvConfig
    gym_state: Any
    user: Any = None
    backend: Any = None
    step_count: int = 0
    history: list[tuple[StepChoice, StepOutcome]] = field(default_factory=list)
    terminated: bool = False

    @property
    def initial_observation(self) -> str:
        return self.gym_state.initial_observation()

    def history_to_dicts(self) -> list[dict]:
        return [
            {"choice": {"verb": c.verb.value, "content": c.content}, "outcome": o.to_dict()}
            for c, o in self.history
        ]

    @staticmethod
    def history_from_dicts(items: list[dict]) -> list[tuple[StepChoice, StepOutcome]]:
        return [
            (
                StepChoice(Verb(i["choice"]["verb"]), i["choice"]["content"]),
                StepOutcome.from_dict(i["outcome"]),
            )
            for i in items
        ]
