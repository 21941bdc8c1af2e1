"""Shared test helpers: task builders, scripted ports, replay driving."""
import pytest

from userl.envs import EnvConfig, GymKind, StepChoice, TaskSpec, Verb, reset, step
from userl.users import ReplayUserPort, ScriptedUserPort


def make_task(gym: str, payload: dict, task_id: str = "task-under-test") -> TaskSpec:
    return TaskSpec(task_id=task_id, gym_kind=GymKind(gym), payload=payload)


def drive(session, steps):
    """Apply (verb, content) pairs; returns the outcomes in order."""
    outcomes = []
    for verb, content in steps:
        outcomes.append(step(session, StepChoice(Verb(verb), content)))
    return outcomes


def recorded_replies(session):
    """Flatten the parsed user fields of a finished session, in call order,
    ready to feed a ReplayUserPort."""
    replies = []
    for _, outcome in session.history:
        for call in outcome.info.get("user_calls", []):
            replies.append(call["fields"])
    return replies


def replay(session, backend=None):
    """Re-drive a session's choices against a replay port; returns the fresh
    session and its outcomes."""
    port = ReplayUserPort(replies=recorded_replies(session))
    fresh = reset(session.task, session.config, user=port, backend=backend)
    outcomes = [step(fresh, choice) for choice, _ in session.history]
    return fresh, outcomes


def outcome_signature(outcomes):
    return [(o.observation, o.raw_reward, o.done) for o in outcomes]
