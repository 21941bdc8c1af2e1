"""Persuasion gym: ladder movement, regressions, the 1.0 cap."""
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_task, outcome_signature, replay
from userl.envs import EnvConfig, StepChoice, Verb, reset, step
from userl.errors import SchemaError
from userl.users import ReplayUserPort, STANCE_LADDER

PAYLOAD = {
    "statement": "Breakfast is the most important meal of the day.",
    "initial_argument": "Skipping it wrecks your concentration.",
}
TASK = make_task("persuade", PAYLOAD)


def stance_port(stances, response="Interesting point."):
    return ReplayUserPort(replies=[
        {"response": response, "stance": s} for s in stances])


def test_initial_observation_shows_statement_and_argument():
    session = reset(TASK, user=stance_port([]))
    text = session.initial_observation
    assert PAYLOAD["statement"] in text
    assert PAYLOAD["initial_argument"] in text


def test_forward_movement_pays_proportionally():
    session = reset(TASK, user=stance_port(["Neutral"]))
    outcome = step(session, StepChoice(Verb.ACTION, "Consider the evidence."))
    # Strongly Agree (0) -> Neutral (3): 3/6
    assert outcome.raw_reward == pytest.approx(0.5)
    assert outcome.info["stance"] == "Neutral"
    assert outcome.info["stance_value"] == pytest.approx(0.5)


def test_regression_earns_zero_but_updates_stance():
    session = reset(
        make_task("persuade", {**PAYLOAD, "initial_stance_level": 3}),
        user=stance_port(["Agree"]))
    outcome = step(session, StepChoice(Verb.ACTION, "Weak argument."))
    assert outcome.raw_reward == 0.0
    assert session.gym_state.stance_level == 1
    assert not outcome.done


def test_reaching_strong_disagreement_ends_session():
    session = reset(
        make_task("persuade", {**PAYLOAD, "initial_stance_level": 5}),
        user=stance_port(["Strongly Disagree"]))
    outcome = step(session, StepChoice(Verb.ACTION, "Final blow."))
    assert outcome.raw_reward == pytest.approx(1 / 6)
    assert outcome.done
    assert outcome.info["terminal_cause"] == "goal"


def test_stance_label_case_folded():
    session = reset(TASK, user=stance_port(["partly disagree"]))
    outcome = step(session, StepChoice(Verb.ACTION, "Hmm."))
    assert outcome.info["stance"] == "Partly Disagree"
    assert outcome.raw_reward == pytest.approx(4 / 6)


def test_unknown_stance_absorbed_after_retry():
    port = ReplayUserPort(replies=[
        {"response": "What?", "stance": "Confused"},
        {"response": "Still what?", "stance": "Utterly Confused"},
    ])
    session = reset(TASK, user=port)
    outcome = step(session, StepChoice(Verb.ACTION, "Argument."))
    assert outcome.raw_reward == 0.0
    assert outcome.info["error"] == "unknown_stance_label"
    assert session.gym_state.stance_level == 0
    assert session.step_count == 1  # turn is recorded, not raised


def test_invalid_initial_stance_level():
    with pytest.raises(SchemaError):
        reset(make_task("persuade", {**PAYLOAD, "initial_stance_level": 9}))


@given(stance_indices=st.lists(st.integers(0, 6), min_size=1, max_size=12))
@settings(max_examples=60, deadline=None)
def test_reward_sum_capped_at_one(stance_indices):
    stances = [STANCE_LADDER[i] for i in stance_indices]
    config = EnvConfig(max_steps=50)
    session = reset(TASK, config, user=stance_port(stances))
    total = 0.0
    max_seen = 0
    regressed_below_max = False
    for i, idx in enumerate(stance_indices):
        if session.terminated:
            break
        outcome = step(session, StepChoice(Verb.ACTION, f"argument {i}"))
        total += outcome.raw_reward
        if idx < max_seen:
            regressed_below_max = True
        max_seen = max(max_seen, idx)
    # A regression resets the baseline, so re-climbed levels pay again and the
    # session total can exceed 1.0. The cap only holds for monotone sessions.
    if not regressed_below_max:
        assert total <= 1.0 + 1e-12
        if session.gym_state.stance_level == 6:
            assert total == pytest.approx(1.0)
    assert total >= 0.0


def test_replay_reproduces_rewards():
    session = reset(TASK, user=stance_port(["Partly Agree", "Disagree"]))
    step(session, StepChoice(Verb.ACTION, "First."))
    step(session, StepChoice(Verb.ACTION, "Second."))
    _, outcomes = replay(session)
    assert outcome_signature(outcomes) == outcome_signature(
        [o for _, o in session.history])
