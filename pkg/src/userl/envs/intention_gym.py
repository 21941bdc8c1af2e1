"""Clarifying a vague request until every missing detail is pinned down.

Each agent question triggers two user calls: a conversational reply, and a
coverage evaluation that maps the question onto still-missing details. Reward
grows with the importance of newly covered details, discounted when one
question sweeps several at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import SchemaError
from ..users.prompts import Role
from .base import StepContext, call_user_role, register, require_fields
from .telepathy_gym import dialogue_messages
from .types import EnvConfig, GymKind, StepChoice, StepOutcome

IMPORTANCE_BASE = {3: 1.0, 2: 0.7, 1: 0.4}
MULTI_DETAIL_PENALTY = 0.2


@dataclass
class MissingDetail:
    text: str
    importance: int
    covered: bool = False


@dataclass
class IntentionState:
    vague_task: str
    details: list[MissingDetail]
    dialog: list[tuple[str, str]] = field(default_factory=list)

    def initial_observation(self) -> str:
        return (f"I need help with something: {self.vague_task} "
                "Ask me questions to work out exactly what I am looking for.")

    def remaining(self) -> list[tuple[int, MissingDetail]]:
        return [(i, d) for i, d in enumerate(self.details) if not d.covered]


def render_remaining(state: IntentionState) -> str:
    lines = [f"{i}. {d.text}" for i, d in state.remaining()]
    return "\n".join(lines) if lines else "(none left)"


def _coerce_index(value) -> int | None:
    try:
        number = float(value)
    except (TypeError, ValueError):
        return None
    if number != int(number):
        return None
    return int(number)


class IntentionGym:
    kind = GymKind.INTENTION

    def validate_payload(self, payload: dict) -> None:
        require_fields(payload, ("vague_task", "missing_details"), "intention")
        details = payload["missing_details"]
        if not isinstance(details, list) or not details:
            raise SchemaError("intention missing_details must be a non-empty list")
        for entry in details:
            if not isinstance(entry, dict) or "text" not in entry:
                raise SchemaError("intention detail needs a text field")
            if entry.get("importance") not in (1, 2, 3):
                raise SchemaError("intention detail importance must be 1, 2 or 3")

    def build_state(self, payload: dict, config: EnvConfig) -> IntentionState:
        return IntentionState(
            vague_task=str(payload["vague_task"]),
            details=[MissingDetail(str(e["text"]), int(e["importance"]))
                     for e in payload["missing_details"]],
        )

    def transition(self, state: IntentionState, choice: StepChoice,
                   ctx: StepContext) -> StepOutcome:
        conversation = dialogue_messages(state.dialog, choice.content)
        reply_fields, reply_record = call_user_role(
            ctx, GymKind.INTENTION, Role.RESPONDER,
            {"vague_task": state.vague_task}, conversation)
        response = str(reply_fields["response"])

        coverage_fields, coverage_record = call_user_role(
            ctx, GymKind.INTENTION, Role.JUDGE,
            {"vague_task": state.vague_task, "missing_details": render_remaining(state)},
            [{"role": "user", "content": choice.content}])

        raw_indices = coverage_fields.get("covered_detail_indices")
        if not isinstance(raw_indices, list):
            raw_indices = []
        valid_indices = {i for i, _ in state.remaining()}
        newly: list[int] = []
        dropped: list = []
        for value in raw_indices:
            index = _coerce_index(value)
            if index is None or index not in valid_indices or index in newly:
                dropped.append(value)
            else:
                newly.append(index)

        if newly:
            reward = sum(IMPORTANCE_BASE[state.details[i].importance] for i in newly)
            reward -= MULTI_DETAIL_PENALTY * (len(newly) - 1)
            for i in newly:
                state.details[i].covered = True
        else:
            reward = 0.0

        state.dialog.append((choice.content, response))
        done = all(d.covered for d in state.details)
        info = {"user_calls": [reply_record, coverage_record],
                "covered_indices": newly}
        if dropped:
            info["dropped_indices"] = dropped
        return StepOutcome(observation=response, raw_reward=reward, done=done, info=info)


register(IntentionGym())
