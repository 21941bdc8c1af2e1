"""Shaping math against hand-computed values and algebraic properties."""
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from userl.errors import DomainError, LengthMismatch
from userl.rewards import (
    ShapingSpec,
    TrajScheme,
    TurnScheme,
    broadcast_to_tokens,
    em_map,
    reward_to_go,
    score_trajectory,
    shape_turn_rewards,
)

unit_floats = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
reward_lists = st.lists(unit_floats, min_size=1, max_size=16)


def spec(turn="naive", traj="sum", **kw) -> ShapingSpec:
    return ShapingSpec(turn_scheme=TurnScheme(turn), traj_scheme=TrajScheme(traj), **kw)


# --- exponential map ---------------------------------------------------------


def test_em_frozen_values():
    assert em_map(0.0, 2.0) == 0.5
    assert em_map(1.0, 2.0) == 1.0
    # hand oracle: 0.5 + 0.5*(1-e^-1)/(1-e^-2)
    assert em_map(0.5, 2.0) == pytest.approx(0.8655292893150024, abs=1e-12)


def test_em_rejects_out_of_domain():
    for bad in (-0.1, 1.0000001, 2.0):
        with pytest.raises(DomainError):
            em_map(bad, 2.0)


@given(r=unit_floats, k=st.floats(min_value=0.05, max_value=10.0))
def test_em_range_and_endpoints(r, k):
    value = em_map(r, k)
    assert 0.5 <= value <= 1.0
    assert em_map(0.0, k) == 0.5
    assert em_map(1.0, k) == pytest.approx(1.0, abs=1e-12)


@given(
    r1=unit_floats, r2=unit_floats,
    k=st.sampled_from([0.5, 1.0, 2.0, 5.0]),
)
def test_em_strictly_monotone(r1, r2, k):
    lo, hi = sorted((r1, r2))
    if hi - lo < 1e-12:
        # below float resolution the map may round to equal outputs
        assert em_map(lo, k) <= em_map(hi, k)
    else:
        assert em_map(lo, k) < em_map(hi, k)


# --- reward-to-go (turn level) -----------------------------------------------


def test_r2g_frozen_sequence():
    out = reward_to_go([0.0, 0.0, 1.0], 0.8)
    # exact float arithmetic of the recursion: [0.8*0.8, 0.8, 1.0]
    assert out == [0.8 * 0.8, 0.8, 1.0]
    assert out[0] == pytest.approx(0.64, abs=1e-12)


def test_r2g_single_turn_identity():
    assert reward_to_go([0.7], 0.8) == [0.7]


@given(rewards=reward_lists)
def test_r2g_gamma_zero_is_naive(rewards):
    assert reward_to_go(rewards, 0.0) == rewards


@given(rewards=reward_lists, gamma=st.floats(min_value=0.0, max_value=1.0))
def test_r2g_matches_direct_definition(rewards, gamma):
    out = reward_to_go(rewards, gamma)
    for t in range(len(rewards)):
        direct = sum((gamma ** (j - t)) * rewards[j] for j in range(t, len(rewards)))
        assert out[t] == pytest.approx(direct, abs=1e-9)


# --- turn shaping dispatch -----------------------------------------------------


def test_naive_is_identity():
    rewards = [0.2, 0.0, 1.0]
    assert shape_turn_rewards(spec("naive"), rewards, 99.0) == rewards


def test_equalized_broadcasts_trajectory_score():
    shaped = shape_turn_rewards(spec("equalized"), [0.1, 0.2, 0.3], 1.25)
    assert shaped == [1.25, 1.25, 1.25]


def test_em_shaping_maps_each_turn():
    shaped = shape_turn_rewards(spec("em", k=2.0), [0.0, 1.0], 0.0)
    assert shaped == [0.5, 1.0]


def test_shaping_rejects_empty():
    with pytest.raises(ValueError):
        shape_turn_rewards(spec("naive"), [], 0.0)


# --- trajectory scoring ---------------------------------------------------------


def test_traj_sum():
    assert score_trajectory(spec(traj="sum"), [0.2, 0.2, 1.0]) == pytest.approx(1.4)


def test_traj_r2g_frozen():
    score = score_trajectory(spec(traj="r2g", gamma=0.8), [0.2, 0.2, 1.0])
    # 0.2 + 0.8*0.2 + 0.64*1.0
    assert score == pytest.approx(1.0, abs=1e-12)


@given(rewards=reward_lists)
def test_traj_r2g_gamma_one_equals_sum(rewards):
    r2g_score = score_trajectory(spec(traj="r2g", gamma=1.0), rewards)
    sum_score = score_trajectory(spec(traj="sum"), rewards)
    assert r2g_score == pytest.approx(sum_score, abs=1e-9)


@given(
    rewards=st.lists(unit_floats, min_size=2, max_size=16),
    gamma=st.sampled_from([0.5, 0.8, 0.99]),
    data=st.data(),
)
def test_traj_r2g_strictly_prefers_earlier(rewards, gamma, data):
    """Moving a positive reward into an earlier zero slot raises the score."""
    zero_slots = [i for i, r in enumerate(rewards) if r == 0.0]
    pos_slots = [j for j, r in enumerate(rewards) if r > 1e-9]
    pairs = [(i, j) for i in zero_slots for j in pos_slots if i < j]
    if not pairs:
        return
    i, j = data.draw(st.sampled_from(pairs))
    earlier = list(rewards)
    earlier[i], earlier[j] = earlier[j], earlier[i]
    later_score = score_trajectory(spec(traj="r2g", gamma=gamma), rewards)
    earlier_score = score_trajectory(spec(traj="r2g", gamma=gamma), earlier)
    assert earlier_score > later_score


# --- token broadcast -------------------------------------------------------------


def test_broadcast_repeats_per_token():
    assert broadcast_to_tokens([1.5, -2.0], [2, 3]) == [1.5, 1.5, -2.0, -2.0, -2.0]


def test_broadcast_length_mismatch():
    with pytest.raises(LengthMismatch):
        broadcast_to_tokens([1.0], [1, 2])


def test_broadcast_rejects_nonpositive_counts():
    with pytest.raises(ValueError):
        broadcast_to_tokens([1.0], [0])


@given(
    advantages=st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=8),
    data=st.data(),
)
def test_broadcast_total_length(advantages, data):
    counts = data.draw(
        st.lists(st.integers(1, 9), min_size=len(advantages), max_size=len(advantages)))
    flat = broadcast_to_tokens(advantages, counts)
    assert len(flat) == sum(counts)
    cursor = 0
    for adv, count in zip(advantages, counts):
        assert flat[cursor:cursor + count] == [adv] * count
        cursor += count
