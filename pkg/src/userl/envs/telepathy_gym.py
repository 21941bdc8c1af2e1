"""Twenty-questions style entity guessing.

The user holds a target entity in mind and answers the agent's yes/no
questions (action). A final guess (answer) is judged for equivalence with
the target; a wrong guess costs the turn but not the session.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import MalformedUserReply, NoStructuredContent, SchemaViolation
from ..users.prompts import Role
from .base import StepContext, call_user_role, register, require_fields
from .types import EnvConfig, GymKind, StepChoice, StepOutcome, Verb


def dialogue_messages(history: list[tuple[str, str]], latest: str) -> list[dict]:
    """Interleave past (agent line, user line) pairs, ending on the new line."""
    messages: list[dict] = []
    for agent_line, user_line in history:
        messages.append({"role": "user", "content": agent_line})
        messages.append({"role": "assistant", "content": user_line})
    messages.append({"role": "user", "content": latest})
    return messages


@dataclass
class TelepathyState:
    target_entity: str
    entity_description: str
    category: str | None = None
    clue_history: list[tuple[str, str]] = field(default_factory=list)
    solved: bool = False

    def initial_observation(self) -> str:
        text = ("I am thinking of something specific. Ask me yes-or-no questions "
                "to narrow it down, and tell me your final guess when you are "
                "confident.")
        if self.category:
            text += f" Hint: it is {self.category}."
        return text


class TelepathyGym:
    kind = GymKind.TELEPATHY

    def validate_payload(self, payload: dict) -> None:
        require_fields(payload, ("target_entity", "entity_description"), "telepathy")

    def build_state(self, payload: dict, config: EnvConfig) -> TelepathyState:
        return TelepathyState(
            target_entity=str(payload["target_entity"]),
            entity_description=str(payload["entity_description"]),
            category=payload.get("category"),
        )

    def transition(self, state: TelepathyState, choice: StepChoice,
                   ctx: StepContext) -> StepOutcome:
        bindings = {"target_entity": state.target_entity,
                    "entity_description": state.entity_description}
        if choice.verb is Verb.ACTION:
            conversation = dialogue_messages(state.clue_history, choice.content)
            try:
                fields, record = call_user_role(
                    ctx, GymKind.TELEPATHY, Role.RESPONDER, bindings, conversation)
            except (SchemaViolation, NoStructuredContent) as exc:
                raise MalformedUserReply(
                    f"yes/no reply unusable after retry: {exc}") from exc
            reply = fields["response"]
            state.clue_history.append((choice.content, reply))
            return StepOutcome(observation=reply, raw_reward=0.0, done=False,
                               info={"user_calls": [record]})

        guess_line = f"My final guess: {choice.content}"
        conversation = dialogue_messages(state.clue_history, guess_line)
        try:
            fields, record = call_user_role(
                ctx, GymKind.TELEPATHY, Role.JUDGE, bindings, conversation)
        except (SchemaViolation, NoStructuredContent) as exc:
            raise MalformedUserReply(
                f"guess judgment unusable after retry: {exc}") from exc
        correct = fields["judgment"] == "Yes"
        if correct:
            state.solved = True
            observation = fields.get("feedback") or "You got it, that is exactly it."
        else:
            observation = fields.get("feedback") or "No, that is not what I have in mind."
        return StepOutcome(observation=observation,
                           raw_reward=1.0 if correct else 0.0,
                           done=correct,
                           info={"user_calls": [record], "judgment": fields["judgment"]})


register(TelepathyGym())
