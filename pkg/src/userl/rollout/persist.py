"""Run artifacts on disk: JSONL streams written temp-then-rename.

A crashed run leaves at worst a stale .tmp file, never a half-indexed
artifact under the final name.
"""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterable, Mapping

from ..envs.types import TaskSpec
from ..errors import AbortedGroup, GroupTooSmall
from ..rewards.records import RolloutGroup, ShapingSpec
from ..rewards.shaping import group_advantages
from .episode import SessionTranscript
from .metrics import MetricsReport, build_report


def write_jsonl(records: Iterable[dict], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    return path


def read_jsonl(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_json(record: dict, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(json.dumps(record, ensure_ascii=False, indent=2) + "\n",
                       encoding="utf-8")
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    return path


def export_advantages(groups: Iterable[RolloutGroup], spec: ShapingSpec,
                      path: str | Path, allow_aborted: bool = False) -> Path:
    """Advantage tensors for external trainers, one JSONL record per
    trajectory. Flagged groups are refused unless explicitly allowed."""
    records = []
    for group in groups:
        if len(group) < 2:
            raise GroupTooSmall(
                f"task {group.task_id!r}: advantage export needs a group of >= 2 "
                f"trajectories, got {len(group)}")
        if group.aborted and not allow_aborted:
            raise AbortedGroup(
                f"task {group.task_id!r}: group holds aborted trajectories; "
                "pass allow_aborted to export anyway")
        records.extend(t.to_record() for t in group_advantages(group, spec))
    return write_jsonl(records, path)


def persist_run(groups: list[RolloutGroup],
                transcripts: list[SessionTranscript],
                tasks: Mapping[str, TaskSpec],
                out_dir: str | Path,
                spec: ShapingSpec | None = None,
                allow_aborted: bool = False) -> tuple[dict, MetricsReport]:
    """Write every artifact stream for one run; returns paths and the report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trajectory_records = []
    for group_index, group in enumerate(groups):
        for traj_index, trajectory in enumerate(group.trajectories):
            record = trajectory.to_dict()
            record["group_index"] = group_index
            record["trajectory_index"] = traj_index
            trajectory_records.append(record)
    paths = {
        "trajectories": write_jsonl(trajectory_records, out / "trajectories.jsonl"),
        "transcripts": write_jsonl((t.to_dict() for t in transcripts),
                                   out / "transcripts.jsonl"),
    }
    report = build_report(groups, tasks)
    paths["metrics"] = write_json(report.to_dict(), out / "metrics.json")
    if spec is not None:
        paths["advantages"] = export_advantages(
            groups, spec, out / "advantages.jsonl", allow_aborted=allow_aborted)
    return paths, report
