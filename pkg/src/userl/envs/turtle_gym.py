"""Lateral-thinking story reconstruction (surface story, hidden bottom).

Yes/no probing (action) is free; a full story attempt (answer) is scored
against weighted criteria and rewarded only for improvement over the best
attempt so far, so total answer reward telescopes to the best score reached.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import CriterionCountMismatch, MalformedUserReply, SchemaError
from ..users.prompts import Role
from .base import StepContext, call_user_role, register, require_fields
from .telepathy_gym import dialogue_messages
from .types import EnvConfig, GymKind, StepChoice, StepOutcome, Verb

VALID_SCORES = (0.0, 0.5, 1.0)
WEIGHT_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Criterion:
    statement: str
    weight: float


@dataclass
class TurtleState:
    surface: str
    bottom: str
    criteria: list[Criterion]
    best_score: float = 0.0
    inquiry_history: list[tuple[str, str]] = field(default_factory=list)

    def initial_observation(self) -> str:
        return (
            "Here is a puzzling story: "
            f"{self.surface} "
            "Ask me yes-or-no questions to work out what really happened, then "
            "answer with your full reconstruction of the story."
        )


def render_criteria(criteria: list[Criterion]) -> str:
    return "\n".join(f"{i + 1}. {c.statement}" for i, c in enumerate(criteria))


def extract_scores(raw_scores, expected_count: int) -> list[float]:
    """Pull numeric scores out of the judge reply; entries may be plain
    numbers or objects carrying a `score` field."""
    if not isinstance(raw_scores, list):
        raise MalformedUserReply("scores must be a list")
    if len(raw_scores) != expected_count:
        raise CriterionCountMismatch(
            f"expected {expected_count} scores, got {len(raw_scores)}")
    values: list[float] = []
    for entry in raw_scores:
        candidate = entry.get("score") if isinstance(entry, dict) else entry
        try:
            value = float(candidate)
        except (TypeError, ValueError):
            raise MalformedUserReply(f"score entry {entry!r} is not numeric")
        if value not in VALID_SCORES:
            raise MalformedUserReply(f"score {value} outside {{0, 0.5, 1.0}}")
        values.append(value)
    return values


class TurtleGym:
    kind = GymKind.TURTLE

    def validate_payload(self, payload: dict) -> None:
        require_fields(payload, ("surface", "bottom", "criteria"), "turtle")
        criteria = payload["criteria"]
        if not isinstance(criteria, list) or not criteria:
            raise SchemaError("turtle criteria must be a non-empty list")
        total = 0.0
        for entry in criteria:
            if not isinstance(entry, dict) or "statement" not in entry or "weight" not in entry:
                raise SchemaError("turtle criterion needs statement and weight")
            try:
                weight = float(entry["weight"])
            except (TypeError, ValueError):
                raise SchemaError("turtle criterion weight must be a number")
            if weight < 0:
                raise SchemaError("turtle criterion weight must be non-negative")
            total += weight
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise SchemaError(f"turtle criterion weights must sum to 1, got {total}")

    def build_state(self, payload: dict, config: EnvConfig) -> TurtleState:
        return TurtleState(
            surface=str(payload["surface"]),
            bottom=str(payload["bottom"]),
            criteria=[Criterion(str(e["statement"]), float(e["weight"]))
                      for e in payload["criteria"]],
        )

    def transition(self, state: TurtleState, choice: StepChoice,
                   ctx: StepContext) -> StepOutcome:
        if choice.verb is Verb.ACTION:
            bindings = {"surface": state.surface, "bottom": state.bottom}
            conversation = dialogue_messages(state.inquiry_history, choice.content)
            fields, record = call_user_role(
                ctx, GymKind.TURTLE, Role.RESPONDER, bindings, conversation)
            reply = fields["response"]
            state.inquiry_history.append((choice.content, reply))
            return StepOutcome(observation=reply, raw_reward=0.0, done=False,
                               info={"user_calls": [record]})

        bindings = {"surface": state.surface, "bottom": state.bottom,
                    "criteria": render_criteria(state.criteria)}
        conversation = dialogue_messages(
            state.inquiry_history, f"My reconstruction of the story: {choice.content}")
        count = len(state.criteria)
        parsed: dict = {}

        def check(fields: dict) -> None:
            parsed["scores"] = extract_scores(fields["scores"], count)

        fields, record = call_user_role(
            ctx, GymKind.TURTLE, Role.JUDGE, bindings, conversation, validate=check)
        scores = parsed["scores"]
        attempt_score = sum(c.weight * s for c, s in zip(state.criteria, scores))
        reward = max(0.0, attempt_score - state.best_score)
        state.best_score = max(state.best_score, attempt_score)
        done = attempt_score >= ctx.config.success_threshold
        observation = fields.get("feedback") or (
            "Your story captures it." if done
            else "Parts of your story fit, but it is not the full picture yet.")
        return StepOutcome(
            observation=observation, raw_reward=reward, done=done,
            info={"user_calls": [record], "attempt_score": attempt_score,
                  "best_score": state.best_score, "criterion_scores": scores})


register(TurtleGym())
