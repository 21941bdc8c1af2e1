"""Side-by-side training runs across shaping settings on the chain gym.

A setting names a turn scheme and a trajectory scheme as "turn/traj"
(for example "equalized/r2g"). Each setting trains once per seed; curves
are reported raw and Gaussian-smoothed, and the summary table carries the
post-training evaluation of each run.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Iterable, Sequence

import numpy as np
from scipy.ndimage import gaussian_filter1d

from ..rewards.records import ShapingSpec, TrajScheme, TurnScheme
from .training import EvalStats, TrainResult, evaluate, train

SMOOTH_SIGMA = 2.0


def parse_setting(text: str) -> ShapingSpec:
    """Builds a ShapingSpec from a "turn/traj" pair such as "em/r2g"."""
    parts = text.strip().lower().split("/")
    if len(parts) != 2:
        raise ValueError(f"setting must look like 'equalized/r2g', got {text!r}")
    try:
        return ShapingSpec(turn_scheme=TurnScheme(parts[0]),
                           traj_scheme=TrajScheme(parts[1]))
    except ValueError as exc:
        raise ValueError(f"unknown shaping setting {text!r}") from exc


def smooth_curve(values: Sequence[float], sigma: float = SMOOTH_SIGMA) -> list[float]:
    if not values:
        return []
    return gaussian_filter1d(np.asarray(values, dtype=float), sigma=sigma).tolist()


@dataclass
class SettingRun:
    setting: str
    seed: int
    rewards: list[float]
    smoothed: list[float]
    evaluation: EvalStats

    @property
    def final_reward(self) -> float:
        return self.smoothed[-1] if self.smoothed else 0.0


@dataclass
class CompareReport:
    epochs: int
    runs: list[SettingRun] = field(default_factory=list)

    @property
    def settings(self) -> list[str]:
        seen: list[str] = []
        for run in self.runs:
            if run.setting not in seen:
                seen.append(run.setting)
        return seen

    def runs_for(self, setting: str) -> list[SettingRun]:
        return [run for run in self.runs if run.setting == setting]

    def solve_rate(self, setting: str) -> float:
        return fmean(run.evaluation.solve_rate for run in self.runs_for(setting))

    def worst_solve_rate(self, setting: str) -> float:
        return min(run.evaluation.solve_rate for run in self.runs_for(setting))

    def mean_turns_to_solve(self, setting: str) -> float:
        return fmean(run.evaluation.mean_turns_to_solve
                     for run in self.runs_for(setting))

    def final_reward(self, setting: str) -> float:
        return fmean(run.final_reward for run in self.runs_for(setting))


def compare_settings(settings: Sequence[str], epochs: int = 200,
                     seeds: int | Iterable[int] = 3, group_size: int = 8,
                     groups_per_epoch: int = 4, learning_rate: float = 1.0,
                     epsilon: float = 0.2, horizon: int = 8,
                     eval_episodes: int = 400) -> CompareReport:
    """Trains every setting on every seed and evaluates the result.

    `seeds` is either a count (0..n-1) or an explicit list. A single
    setting or seed is accepted and yields a one-curve report.
    """
    if not settings:
        raise ValueError("need at least one setting")
    seed_list = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    if not seed_list:
        raise ValueError("need at least one seed")

    report = CompareReport(epochs=epochs)
    for setting in settings:
        spec = parse_setting(setting)
        for seed in seed_list:
            result: TrainResult = train(
                spec, epochs=epochs, seed=seed, group_size=group_size,
                groups_per_epoch=groups_per_epoch,
                learning_rate=learning_rate, epsilon=epsilon, horizon=horizon)
            stats = evaluate(result.policy, episodes=eval_episodes,
                             seed=seed + 100_000, horizon=horizon)
            report.runs.append(SettingRun(
                setting=setting,
                seed=seed,
                rewards=result.reward_curve,
                smoothed=smooth_curve(result.reward_curve),
                evaluation=stats,
            ))
    return report


def summary_table(report: CompareReport) -> str:
    header = (f"{'setting':<16} {'solve_rate':>10} {'worst_seed':>10} "
              f"{'turns_to_solve':>14} {'final_reward':>12}")
    lines = [header, "-" * len(header)]
    for setting in report.settings:
        lines.append(
            f"{setting:<16} {report.solve_rate(setting):>10.3f} "
            f"{report.worst_solve_rate(setting):>10.3f} "
            f"{report.mean_turns_to_solve(setting):>14.2f} "
            f"{report.final_reward(setting):>12.3f}")
    return "\n".join(lines)


def write_report(report: CompareReport, out_dir: str | Path) -> dict[str, Path]:
    """Emits curves.csv plus the rendered summary under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    curves_path = out / "curves.csv"
    with curves_path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["setting", "seed", "epoch", "reward_sum",
                         "smoothed_reward_sum"])
        for run in report.runs:
            for epoch, (raw, smoothed) in enumerate(zip(run.rewards,
                                                        run.smoothed)):
                writer.writerow([run.setting, run.seed, epoch,
                                 f"{raw:.6f}", f"{smoothed:.6f}"])

    summary_path = out / "summary.txt"
    summary_path.write_text(summary_table(report) + "\n")
    return {"curves": curves_path, "summary": summary_path}
