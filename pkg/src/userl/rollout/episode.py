"""Episode and group orchestration: policy endpoint in a loop with a gym.

One assistant message drives at most one environment step. The tool result
carries the observation only; rewards stay on the reward side of the fence
and are never shown to the policy.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..envs.base import reset, step
from ..envs.types import EnvConfig, GymKind, StepChoice, TaskSpec, Verb
from ..errors import (
    MalformedUserReply,
    PolicyEndpointError,
    UserPortFailure,
    VerbNotAllowed,
)
from ..rewards.records import (
    RolloutGroup,
    ShapingSpec,
    TerminationReason,
    Trajectory,
    TurnRecord,
)
from .policy import INTERACT_TOOL, agent_system_prompt

_TOOL_NAME = INTERACT_TOOL["function"]["name"]
_FORMAT_REMINDER = (
    "Your last message could not be used: {problem}. Reply again with exactly "
    f"one `{_TOOL_NAME}` tool call whose arguments are a JSON object with "
    'string fields "choice" and "content".'
)


@dataclass
class RolloutPlan:
    """Everything one rollout run needs besides the tasks themselves.

    `policy` and `user` may be shared client/port objects, or callables
    taking the per-episode seed and returning one (for stateful scripted
    fixtures). Episode seeds are plan.seed + episode index.
    """

    policy: object
    user: object = None
    backend: object = None
    group_size: int = 8
    max_turns: int = 16
    shaping: ShapingSpec = field(default_factory=ShapingSpec)
    env_config: EnvConfig = field(default_factory=EnvConfig)
    seed: int = 0
    concurrency: int = 8
    out_dir: str | None = None

    def __post_init__(self):
        if self.group_size < 1:
            raise ValueError("group_size must be >= 1")
        if self.max_turns < 1:
            raise ValueError("max_turns must be >= 1")
        if self.max_turns > self.env_config.max_steps:
            raise ValueError(
                f"max_turns ({self.max_turns}) must not exceed the gym step "
                f"budget ({self.env_config.max_steps})")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")


@dataclass
class SessionTranscript:
    """The policy-facing message log plus a parse status per assistant turn."""

    task_id: str
    episode_index: int
    messages: list[dict]
    parse_statuses: list[str]
    terminated_reason: TerminationReason

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "episode_index": self.episode_index,
            "messages": self.messages,
            "parse_statuses": self.parse_statuses,
            "terminated_reason": self.terminated_reason.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionTranscript":
        return cls(
            task_id=d["task_id"],
            episode_index=d["episode_index"],
            messages=d["messages"],
            parse_statuses=d["parse_statuses"],
            terminated_reason=TerminationReason(d["terminated_reason"]),
        )


def _resolve(factory_or_value, seed: int):
    if callable(factory_or_value):
        return factory_or_value(seed)
    return factory_or_value


def _parse_tool_call(message: dict):
    """Returns (status, choice, call_id, problem). status "ok" on success."""
    calls = message.get("tool_calls") or []
    if not calls:
        return "no_tool_call", None, None, "it contained no tool call"
    if len(calls) > 1:
        return ("multiple_tool_calls", None, calls[0].get("id"),
                "it contained more than one tool call; make exactly one")
    call = calls[0]
    call_id = call.get("id")
    function = call.get("function") or {}
    if function.get("name") != _TOOL_NAME:
        return ("bad_arguments", None, call_id,
                f"it called {function.get('name')!r} instead of {_TOOL_NAME!r}")
    try:
        arguments = json.loads(function.get("arguments") or "")
    except (json.JSONDecodeError, TypeError):
        return ("bad_arguments", None, call_id,
                "its arguments were not valid JSON")
    if not isinstance(arguments, dict):
        return "bad_arguments", None, call_id, "its arguments were not an object"
    raw_choice = arguments.get("choice")
    content = arguments.get("content")
    try:
        verb = Verb(raw_choice)
    except ValueError:
        return ("bad_arguments", None, call_id,
                'its "choice" was not one of action, answer, search')
    if not isinstance(content, str) or not content.strip():
        return ("bad_arguments", None, call_id,
                'its "content" must be a non-empty string')
    return "ok", StepChoice(verb, content), call_id, None


def _failure_reply(messages: list[dict], message: dict, call_id, problem: str):
    """Append the protocol-correct nudge after an unusable assistant turn."""
    reminder = _FORMAT_REMINDER.format(problem=problem)
    for call in message.get("tool_calls") or []:
        messages.append({"role": "tool", "tool_call_id": call.get("id"),
                         "content": reminder})
    if not message.get("tool_calls"):
        messages.append({"role": "user", "content": reminder})


def run_episode(plan: RolloutPlan, task: TaskSpec,
                episode_index: int = 0) -> tuple[Trajectory, SessionTranscript]:
    """One policy-driven session. Aborts after two consecutive unusable
    assistant turns or an unrecoverable endpoint failure."""
    seed = plan.seed + episode_index
    policy = _resolve(plan.policy, seed)
    user = _resolve(plan.user, seed)
    session = reset(task, plan.env_config, user=user, backend=plan.backend)
    messages = [
        {"role": "system", "content": agent_system_prompt(task.gym_kind)},
        {"role": "user", "content": session.initial_observation},
    ]
    statuses: list[str] = []
    turns: list[TurnRecord] = []
    reason: TerminationReason | None = None
    consecutive_failures = 0

    while len(turns) < plan.max_turns:
        try:
            reply = policy.complete(messages, [INTERACT_TOOL], seed=seed)
        except PolicyEndpointError:
            reason = TerminationReason.ABORTED
            statuses.append("endpoint_failure")
            break
        messages.append(reply.message)
        status, choice, call_id, problem = _parse_tool_call(reply.message)
        if status != "ok":
            statuses.append(status)
            consecutive_failures += 1
            if consecutive_failures >= 2:
                reason = TerminationReason.ABORTED
                break
            _failure_reply(messages, reply.message, call_id, problem)
            continue
        try:
            outcome = step(session, choice)
        except VerbNotAllowed as exc:
            statuses.append("rejected_verb")
            consecutive_failures += 1
            if consecutive_failures >= 2:
                reason = TerminationReason.ABORTED
                break
            messages.append({"role": "tool", "tool_call_id": call_id,
                             "content": str(exc)})
            continue
        except (UserPortFailure, MalformedUserReply) as exc:
            # Retries already happened inside the user port; give up cleanly.
            statuses.append("user_failure")
            messages.append({"role": "tool", "tool_call_id": call_id,
                             "content": f"environment unavailable: {exc}"})
            reason = TerminationReason.ABORTED
            break
        statuses.append("ok")
        consecutive_failures = 0
        messages.append({"role": "tool", "tool_call_id": call_id,
                         "content": outcome.observation})
        turns.append(TurnRecord(
            turn_index=len(turns) + 1,
            choice=choice,
            observation=outcome.observation,
            raw_reward=outcome.raw_reward,
            token_count=reply.token_count,
            token_count_estimated=reply.token_count_estimated,
            info=outcome.info,
        ))
        if outcome.done or session.terminated:
            # terminal_cause distinguishes solving from the env's own step cap
            cause = outcome.info.get("terminal_cause")
            reason = (TerminationReason.GOAL if cause == "goal"
                      else TerminationReason.BUDGET)
            break
    if reason is None:
        reason = TerminationReason.BUDGET
    trajectory = Trajectory(task_id=task.task_id, turns=turns,
                            terminated_reason=reason)
    transcript = SessionTranscript(
        task_id=task.task_id,
        episode_index=episode_index,
        messages=messages,
        parse_statuses=statuses,
        terminated_reason=reason,
    )
    return trajectory, transcript


def run_group(plan: RolloutPlan,
              task: TaskSpec) -> tuple[RolloutGroup, list[SessionTranscript]]:
    """group_size independent episodes of one task, assembled in index order."""
    indices = range(plan.group_size)
    if plan.concurrency == 1 or plan.group_size == 1:
        results = [run_episode(plan, task, i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=plan.concurrency) as pool:
            results = list(pool.map(lambda i: run_episode(plan, task, i), indices))
    trajectories = [trajectory for trajectory, _ in results]
    transcripts = [transcript for _, transcript in results]
    return RolloutGroup(task_id=task.task_id, trajectories=trajectories), transcripts


def probe_policy(plan: RolloutPlan) -> None:
    """Fail fast before a long run if the policy endpoint is down."""
    policy = _resolve(plan.policy, plan.seed)
    probe = getattr(policy, "probe", None)
    if probe is not None:
        probe()


__all__ = [
    "GymKind",
    "RolloutPlan",
    "SessionTranscript",
    "probe_policy",
    "run_episode",
    "run_group",
]
