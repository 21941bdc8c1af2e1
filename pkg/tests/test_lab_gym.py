"""Chain gym rules and tabular policy behavior."""
import math

import numpy as np
import pytest

from userl.lab import (
    ACTIONS,
    MAX_TRAJECTORY_SUM,
    ChainGym,
    TabularPolicy,
)


def play(gym, actions):
    state = gym.reset()
    rewards = []
    for action in actions:
        rewards.append(gym.step(state, action))
    return state, rewards


class TestChainGym:
    def test_solve_pays_only_after_unlock(self):
        gym = ChainGym()
        state, rewards = play(gym, ["unlock", "solve"])
        assert rewards == [0.0, 1.0]
        assert state.done

    def test_solve_without_unlock_pays_nothing_and_ends(self):
        gym = ChainGym()
        state, rewards = play(gym, ["solve"])
        assert rewards == [0.0]
        assert state.done

    def test_probe_pays_at_most_twice(self):
        gym = ChainGym()
        _, rewards = play(gym, ["probe", "probe", "probe", "probe"])
        assert rewards == [0.1, 0.1, 0.0, 0.0]

    def test_noop_pays_nothing(self):
        gym = ChainGym()
        _, rewards = play(gym, ["noop", "noop"])
        assert rewards == [0.0, 0.0]

    def test_max_trajectory_sum(self):
        gym = ChainGym()
        _, rewards = play(gym, ["probe", "probe", "unlock", "solve"])
        assert math.isclose(sum(rewards), MAX_TRAJECTORY_SUM)

    def test_horizon_caps_episode(self):
        gym = ChainGym(horizon=3)
        state, rewards = play(gym, ["noop", "noop", "noop"])
        assert state.done
        assert rewards == [0.0, 0.0, 0.0]

    def test_step_after_done_raises(self):
        gym = ChainGym()
        state, _ = play(gym, ["solve"])
        with pytest.raises(RuntimeError):
            gym.step(state, "noop")

    def test_unknown_action_rejected(self):
        gym = ChainGym()
        state = gym.reset()
        with pytest.raises(ValueError):
            gym.step(state, "shout")

    def test_deterministic_replay(self):
        script = ["probe", "unlock", "probe", "solve"]
        _, first = play(ChainGym(), script)
        _, second = play(ChainGym(), script)
        assert first == second

    def test_reset_returns_fresh_state(self):
        gym = ChainGym()
        state = gym.reset()
        assert state.turn == 0
        assert not state.unlocked
        assert state.probes_paid == 0
        assert not state.done


class TestTabularPolicy:
    def test_uniform_start(self):
        policy = TabularPolicy(horizon=8)
        probs = policy.action_probabilities(0)
        assert np.allclose(probs, 0.25)

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(3)
        policy = TabularPolicy(horizon=8,
                               logits=rng.normal(size=(8, len(ACTIONS))))
        for turn in range(8):
            assert math.isclose(policy.action_probabilities(turn).sum(), 1.0,
                                abs_tol=1e-12)

    def test_softmax_is_shift_invariant(self):
        logits = np.array([[1.0, 2.0, 3.0, 4.0]])
        shifted = TabularPolicy(horizon=1, logits=logits + 500.0)
        base = TabularPolicy(horizon=1, logits=logits)
        assert np.allclose(base.action_probabilities(0),
                           shifted.action_probabilities(0))

    def test_extreme_logits_stay_finite(self):
        logits = np.array([[1000.0, 0.0, 0.0, 0.0]])
        probs = TabularPolicy(horizon=1, logits=logits).action_probabilities(0)
        assert np.all(np.isfinite(probs))
        assert probs[0] == pytest.approx(1.0)

    def test_sampling_is_seeded(self):
        policy = TabularPolicy(horizon=4)
        first = [policy.sample_action(0, np.random.default_rng(9))
                 for _ in range(5)]
        second = [policy.sample_action(0, np.random.default_rng(9))
                  for _ in range(5)]
        assert first == second

    def test_sample_reports_probability_of_choice(self):
        logits = np.array([[0.0, 5.0, 0.0, 0.0]])
        policy = TabularPolicy(horizon=1, logits=logits)
        index, prob = policy.sample_action(0, np.random.default_rng(0))
        assert prob == pytest.approx(policy.action_probabilities(0)[index])

    def test_greedy_action(self):
        logits = np.zeros((2, len(ACTIONS)))
        logits[0, 2] = 3.0
        policy = TabularPolicy(horizon=2, logits=logits)
        assert policy.greedy_action(0) == 2

    def test_copy_is_independent(self):
        policy = TabularPolicy(horizon=2)
        clone = policy.copy()
        clone.logits[0, 0] = 10.0
        assert policy.logits[0, 0] == 0.0

    def test_bad_temperature_rejected(self):
        with pytest.raises(ValueError):
            TabularPolicy(horizon=2, temperature=0.0)

    def test_non_finite_logits_rejected(self):
        logits = np.zeros((2, len(ACTIONS)))
        logits[1, 1] = np.inf
        with pytest.raises(ValueError):
            TabularPolicy(horizon=2, logits=logits)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            TabularPolicy(horizon=3, logits=np.zeros((2, len(ACTIONS))))
