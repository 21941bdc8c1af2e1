"""Moving a user from strong agreement to strong disagreement.

One user call per argument returns both the in-character response and the
updated stance label. Reward pays only for movement toward disagreement,
scaled so the full ladder traversal sums to 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import MalformedUserReply, NoStructuredContent, SchemaError, SchemaViolation
from ..users.prompts import Role, STANCE_LADDER
from .base import StepContext, call_user_role, register, require_fields
from .telepathy_gym import dialogue_messages
from .types import EnvConfig, GymKind, StepChoice, StepOutcome

LADDER_TOP = len(STANCE_LADDER) - 1  # 6 levels of movement


@dataclass
class PersuadeState:
    statement: str
    initial_argument: str
    stance_level: int = 0
    dialog: list[tuple[str, str]] = field(default_factory=list)

    def initial_observation(self) -> str:
        return (f"Here is what I believe: {self.statement} {self.initial_argument} "
                "I strongly agree with this. Try to change my mind.")


class PersuadeGym:
    kind = GymKind.PERSUADE

    def validate_payload(self, payload: dict) -> None:
        require_fields(payload, ("statement", "initial_argument"), "persuade")
        level = payload.get("initial_stance_level", 0)
        if not isinstance(level, int) or not 0 <= level <= LADDER_TOP:
            raise SchemaError(
                f"persuade initial_stance_level must be an integer in [0, {LADDER_TOP}]")

    def build_state(self, payload: dict, config: EnvConfig) -> PersuadeState:
        return PersuadeState(
            statement=str(payload["statement"]),
            initial_argument=str(payload["initial_argument"]),
            stance_level=int(payload.get("initial_stance_level", 0)),
        )

    def transition(self, state: PersuadeState, choice: StepChoice,
                   ctx: StepContext) -> StepOutcome:
        bindings = {"statement": state.statement,
                    "initial_argument": state.initial_argument,
                    "current_stance": STANCE_LADDER[state.stance_level]}
        conversation = dialogue_messages(state.dialog, choice.content)
        try:
            fields, record = call_user_role(
                ctx, GymKind.PERSUADE, Role.JUDGE, bindings, conversation)
        except SchemaViolation as exc:
            if exc.field == "stance":
                # Unusable stance after the re-ask: keep the position, no reward.
                return StepOutcome(
                    observation=("I am not sure what to make of that; I will keep "
                                 "my position for now."),
                    raw_reward=0.0, done=False,
                    info={"error": "unknown_stance_label",
                          "stance_level": state.stance_level,
                          "stance": STANCE_LADDER[state.stance_level]})
            raise MalformedUserReply(f"persuasion reply unusable: {exc}") from exc
        except NoStructuredContent as exc:
            raise MalformedUserReply(f"persuasion reply unusable: {exc}") from exc

        response = str(fields["response"])
        new_level = STANCE_LADDER.index(fields["stance"])
        reward = max(0, new_level - state.stance_level) / LADDER_TOP
        state.stance_level = new_level
        state.dialog.append((choice.content, response))
        done = new_level == LADDER_TOP
        return StepOutcome(
            observation=response, raw_reward=reward, done=done,
            info={"user_calls": [record], "stance": fields["stance"],
                  "stance_level": new_level,
                  "stance_value": new_level / LADDER_TOP})


register(PersuadeGym())
