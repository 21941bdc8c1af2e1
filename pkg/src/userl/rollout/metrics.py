"""Evaluation metrics over rollout trajectories.

Per-gym scores use each gym's native success notion: goal-completion rate
where an exact answer exists, summed turn reward where progress is graded,
and best-option coverage for trip booking. Turn metrics are 1-based.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from statistics import fmean
from typing import Iterable, Mapping

from ..envs.types import GymKind, TaskSpec
from ..rewards.records import RolloutGroup, TerminationReason, Trajectory

_SUM_SCORED = {GymKind.TURTLE, GymKind.PERSUADE, GymKind.INTENTION}
_SOLVE_SCORED = {GymKind.FUNCTION, GymKind.TELEPATHY, GymKind.SEARCH}


def _rewards(trajectory) -> list[float]:
    if isinstance(trajectory, Trajectory):
        return trajectory.rewards
    return list(trajectory)


def effective_turns(trajectory) -> int:
    """1-based index of the last turn with reward > 0; 0 when none has any."""
    rewards = _rewards(trajectory)
    for index in range(len(rewards), 0, -1):
        if rewards[index - 1] > 0:
            return index
    return 0


def time_weighted_performance(trajectory) -> float:
    """Sum of r_i / (i + 1) with 1-based i: later reward counts for less."""
    rewards = _rewards(trajectory)
    return sum(r / (i + 1) for i, r in enumerate(rewards, start=1))


def _travel_best_fraction(trajectory: Trajectory, task: TaskSpec) -> float:
    available = sum(
        any(opt.get("label") == "best" for opt in dim.get("options", []))
        for dim in task.payload.get("dimensions", []))
    if available == 0:
        return 0.0
    chosen = sum(turn.info.get("label") == "best" for turn in trajectory.turns)
    return min(chosen, available) / available


def _gym_score(kind: GymKind, trajectories: list[Trajectory],
               tasks: Mapping[str, TaskSpec]) -> float:
    if kind in _SOLVE_SCORED:
        return fmean(
            t.terminated_reason is TerminationReason.GOAL for t in trajectories)
    if kind is GymKind.TRAVEL:
        return fmean(
            _travel_best_fraction(t, tasks[t.task_id]) for t in trajectories)
    # Sum-scored gyms and any external adapter default to summed turn reward.
    return fmean(t.reward_sum() for t in trajectories)


@dataclass
class MetricsReport:
    per_gym_score: dict = field(default_factory=dict)
    effective_turns_mean: float = 0.0
    time_weighted_mean: float = 0.0
    mean_turns: float = 0.0
    termination_histogram: dict = field(default_factory=dict)
    trajectory_count: int = 0

    def to_dict(self) -> dict:
        return {
            "per_gym_score": dict(self.per_gym_score),
            "effective_turns_mean": self.effective_turns_mean,
            "time_weighted_mean": self.time_weighted_mean,
            "mean_turns": self.mean_turns,
            "termination_histogram": dict(self.termination_histogram),
            "trajectory_count": self.trajectory_count,
        }

    def format_table(self) -> str:
        lines = [f"{'gym':<12} {'score':>8}"]
        for gym, score in sorted(self.per_gym_score.items()):
            lines.append(f"{gym:<12} {score:>8.4f}")
        lines.append("")
        lines.append(f"trajectories              {self.trajectory_count}")
        lines.append(f"mean turns                {self.mean_turns:.3f}")
        lines.append(f"mean effective turns      {self.effective_turns_mean:.3f}")
        lines.append(f"mean time-weighted score  {self.time_weighted_mean:.4f}")
        ended = ", ".join(f"{k}={v}" for k, v in
                          sorted(self.termination_histogram.items()))
        lines.append(f"terminations              {ended}")
        return "\n".join(lines)


def build_report(groups: Iterable[RolloutGroup],
                 tasks: Mapping[str, TaskSpec]) -> MetricsReport:
    by_gym: dict[GymKind, list[Trajectory]] = defaultdict(list)
    everything: list[Trajectory] = []
    histogram: dict[str, int] = defaultdict(int)
    for group in groups:
        for trajectory in group.trajectories:
            kind = tasks[trajectory.task_id].gym_kind
            by_gym[kind].append(trajectory)
            everything.append(trajectory)
            histogram[trajectory.terminated_reason.value] += 1
    if not everything:
        return MetricsReport()
    return MetricsReport(
        per_gym_score={kind.value: _gym_score(kind, trajs, tasks)
                       for kind, trajs in by_gym.items()},
        effective_turns_mean=fmean(effective_turns(t) for t in everything),
        time_weighted_mean=fmean(time_weighted_performance(t) for t in everything),
        mean_turns=fmean(len(t.turns) for t in everything),
        termination_histogram=dict(histogram),
        trajectory_count=len(everything),
    )
