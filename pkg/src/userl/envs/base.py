"""Session lifecycle shared by every gym.

A gym module contributes three pure-ish pieces: payload validation, initial
state construction, and a transition function. Everything stateful (step
budget, history, termination, reward postprocessing) lives here so the gyms
stay small automata.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Any, Protocol

from ..errors import SchemaError, SessionTerminated, UnsupportedGym, VerbNotAllowed
from .types import (
    ALLOWED_VERBS,
    EnvConfig,
    EnvSession,
    GymKind,
    StepChoice,
    StepOutcome,
    TaskSpec,
    postprocess_reward,
)


@dataclass(frozen=True)
class StepContext:
    """Collaborators a transition may consult. State mutation stays local."""

    user: Any
    config: EnvConfig
    backend: Any = None


class GymImpl(Protocol):
    kind: GymKind

    def validate_payload(self, payload: dict) -> None: ...

    def build_state(self, payload: dict, config: EnvConfig) -> Any: ...

    def transition(self, state: Any, choice: StepChoice, ctx: StepContext) -> StepOutcome: ...


_REGISTRY: dict[GymKind, GymImpl] = {}


def register(impl: GymImpl) -> GymImpl:
    _REGISTRY[impl.kind] = impl
    return impl


def _ensure_gyms_loaded() -> None:
    # Gym modules register themselves on import. Importing them lazily here
    # keeps `userl.envs.types` importable from the user-simulation layer
    # without a cycle (gyms import that layer for prompts and ports).
    if len(_REGISTRY) < len(GymKind):
        from . import (  # noqa: F401
            function_gym,
            intention_gym,
            persuade_gym,
            search_gym,
            tau_gym,
            telepathy_gym,
            travel_gym,
            turtle_gym,
        )


def get_gym(kind: GymKind) -> GymImpl:
    _ensure_gyms_loaded()
    try:
        return _REGISTRY[kind]
    except KeyError:
        raise UnsupportedGym(f"no gym registered for kind {kind.value!r}")


def reset(task: TaskSpec, config: EnvConfig | None = None, user: Any = None,
          backend: Any = None) -> EnvSession:
    """Validate the task payload and open a fresh session."""
    config = config or EnvConfig()
    impl = get_gym(task.gym_kind)
    impl.validate_payload(task.payload)
    state = impl.build_state(task.payload, config)
    return EnvSession(task=task, config=config, gym_state=state, user=user, backend=backend)


def step(session: EnvSession, choice: StepChoice) -> StepOutcome:
    """Advance the session by one verb.

    The transition runs against a copy of the gym state; it is committed only
    if the transition returns. A user-port or backend failure therefore leaves
    the session exactly as it was, so the caller can retry the same step.
    """
    if session.terminated:
        raise SessionTerminated(
            f"session for task {session.task.task_id!r} already terminated")
    allowed = ALLOWED_VERBS[session.task.gym_kind]
    if choice.verb not in allowed:
        names = ", ".join(sorted(v.value for v in allowed))
        raise VerbNotAllowed(
            f"{session.task.gym_kind.value} accepts only: {names} (got {choice.verb.value})")

    impl = get_gym(session.task.gym_kind)
    ctx = StepContext(user=session.user, config=session.config, backend=session.backend)
    state = copy.deepcopy(session.gym_state)
    outcome = impl.transition(state, choice, ctx)

    step_index = session.step_count + 1
    reward = postprocess_reward(outcome.raw_reward, session.config, step_index)
    done = outcome.done
    info = dict(outcome.info)
    if done:
        info.setdefault("terminal_cause", "goal")
    elif step_index >= session.config.max_steps:
        done = True
        info["terminal_cause"] = "budget"
    final = StepOutcome(observation=outcome.observation, raw_reward=reward,
                        done=done, info=info)

    session.gym_state = state
    session.step_count = step_index
    session.history.append((choice, final))
    session.terminated = done
    return final


def validate_task(task: TaskSpec) -> None:
    """Payload validation without opening a session (used by task loaders)."""
    impl = get_gym(task.gym_kind)
    impl.validate_payload(task.payload)


def call_user_role(ctx: StepContext, gym_kind: GymKind, role, bindings: dict,
                   conversation: list[dict], validate=None) -> tuple[dict, dict]:
    """Render the role's system prompt, query the session's user port, parse.

    Returns (fields, call_record). The record lands in the step's
    info["user_calls"] so a replay port can re-drive the session offline.
    """
    from ..users.ports import judge_with_retry
    from ..users.prompts import get_template, render_prompt

    template = get_template(gym_kind, role)
    rendered = render_prompt(template, bindings)
    fields, retries = judge_with_retry(
        ctx.user, gym_kind, role, rendered, conversation,
        template.reply_schema, validate=validate)
    record = {"role": role.value, "fields": fields}
    if retries:
        record["retries"] = retries
    return fields, record


def require_fields(payload: dict, names: tuple[str, ...], gym: str) -> None:
    if not isinstance(payload, dict):
        raise SchemaError(f"{gym} payload must be an object")
    for name in names:
        if name not in payload or payload[name] in (None, ""):
            raise SchemaError(f"{gym} payload is missing required field {name!r}")
