"""Session lifecycle: reset/step, verb gating, budget, postprocessing."""
import json

import pytest

from conftest import make_task
from userl.envs import (
    ALLOWED_VERBS,
    EnvConfig,
    EnvSession,
    GymKind,
    StepChoice,
    TaskSpec,
    Verb,
    postprocess_reward,
    reset,
    step,
)
from userl.errors import (
    SchemaError,
    SessionTerminated,
    UnsupportedGym,
    UserPortFailure,
    VerbNotAllowed,
)
from userl.users import ScriptedUserPort, ScriptRule, Role

FUNCTION_PAYLOAD = {"hidden_rule": "a + b", "test_case": [1, 2, 3, 4], "expected": 3}


def test_reset_validates_payload():
    with pytest.raises(SchemaError):
        reset(make_task("function", {"test_case": [1, 2, 3, 4], "expected": 3}))
    with pytest.raises(SchemaError):
        reset(make_task("telepathy", {"target_entity": "x"}))


def test_taskspec_requires_known_gym():
    with pytest.raises(SchemaError):
        TaskSpec.from_dict({"task_id": "t", "gym": "chess", "payload": {}})


def test_tau_stub_reset_rejected():
    with pytest.raises(UnsupportedGym):
        reset(make_task("tau_stub", {"domain": "airline"}))


def test_verb_gating_per_gym():
    intention = reset(
        make_task("intention", {
            "vague_task": "help",
            "missing_details": [{"text": "when", "importance": 3}],
        }),
        user=ScriptedUserPort(),
    )
    with pytest.raises(VerbNotAllowed):
        step(intention, StepChoice(Verb.SEARCH, "query"))
    with pytest.raises(VerbNotAllowed):
        step(intention, StepChoice(Verb.ANSWER, "done"))
    assert intention.step_count == 0  # rejected verbs consume nothing


def test_allowed_verbs_table():
    assert ALLOWED_VERBS[GymKind.FUNCTION] == {Verb.ACTION, Verb.SEARCH, Verb.ANSWER}
    assert ALLOWED_VERBS[GymKind.TELEPATHY] == {Verb.ACTION, Verb.ANSWER}
    assert ALLOWED_VERBS[GymKind.INTENTION] == {Verb.ACTION}
    assert ALLOWED_VERBS[GymKind.PERSUADE] == {Verb.ACTION}
    assert ALLOWED_VERBS[GymKind.SEARCH] == {Verb.SEARCH, Verb.ANSWER}


def test_session_terminated_guard():
    session = reset(make_task("function", FUNCTION_PAYLOAD))
    outcome = step(session, StepChoice(Verb.ANSWER, "3"))
    assert outcome.done and outcome.raw_reward == 1.0
    assert outcome.info["terminal_cause"] == "goal"
    with pytest.raises(SessionTerminated):
        step(session, StepChoice(Verb.ANSWER, "3"))


def test_budget_termination():
    config = EnvConfig(max_steps=3)
    session = reset(make_task("function", FUNCTION_PAYLOAD), config)
    step(session, StepChoice(Verb.ACTION, "1 1 1 1"))
    step(session, StepChoice(Verb.ACTION, "2 2 2 2"))
    last = step(session, StepChoice(Verb.ACTION, "3 3 3 3"))
    assert last.done
    assert last.info["terminal_cause"] == "budget"
    assert session.terminated
    assert session.step_count == 3


def test_goal_on_final_budget_step_counts_as_goal():
    config = EnvConfig(max_steps=1)
    session = reset(make_task("function", FUNCTION_PAYLOAD), config)
    outcome = step(session, StepChoice(Verb.ANSWER, "3"))
    assert outcome.done and outcome.info["terminal_cause"] == "goal"


def test_postprocess_reward_identity_default():
    config = EnvConfig()
    for raw in (0.0, 0.25, 1.0, 1.2, -0.5):
        assert postprocess_reward(raw, config, 1) == raw


def test_postprocess_reward_scale_penalty_clamp():
    config = EnvConfig(reward_scale=2.0, step_penalty=0.1)
    assert postprocess_reward(0.5, config, 1) == pytest.approx(0.9)
    clamped = EnvConfig(reward_scale=2.0, normalize_to_unit=True)
    assert postprocess_reward(0.9, clamped, 1) == 1.0
    assert postprocess_reward(-0.2, clamped, 1) == 0.0


def test_port_failure_leaves_session_unchanged():
    class FailingPort:
        implementation = "failing"

        def __init__(self):
            self.calls = 0

        def query(self, *args):
            self.calls += 1
            if self.calls == 1:
                raise UserPortFailure("transient")
            return '```json\n{"response": "Yes"}\n```'

    port = FailingPort()
    task = make_task("telepathy", {"target_entity": "a kite",
                                   "entity_description": "flies on a string"})
    session = reset(task, user=port)
    with pytest.raises(UserPortFailure):
        step(session, StepChoice(Verb.ACTION, "Does it fly?"))
    assert session.step_count == 0
    assert session.history == []
    assert session.gym_state.clue_history == []
    # the very same step can be retried afterwards
    outcome = step(session, StepChoice(Verb.ACTION, "Does it fly?"))
    assert outcome.observation == "Yes"
    assert session.step_count == 1


def test_history_serialization_round_trip():
    task = make_task("function", FUNCTION_PAYLOAD)
    session = reset(task)
    step(session, StepChoice(Verb.SEARCH, "test case"))
    step(session, StepChoice(Verb.ACTION, "10, 20, 1, 1"))
    step(session, StepChoice(Verb.ANSWER, "3"))
    dumped = json.dumps(session.history_to_dicts())
    restored = EnvSession.history_from_dicts(json.loads(dumped))
    assert len(restored) == 3
    for (choice, outcome), (orig_choice, orig_outcome) in zip(restored, session.history):
        assert choice == orig_choice
        assert outcome == orig_outcome


def test_initial_observation_delegates_to_gym_state():
    session = reset(make_task("function", FUNCTION_PAYLOAD))
    text = session.initial_observation
    assert "four numbers" in text
    assert "a + b" not in text  # rule never shown


def test_step_choice_requires_content():
    with pytest.raises(ValueError):
        StepChoice(Verb.ACTION, "")
