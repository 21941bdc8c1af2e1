"""Task files: one JSON object per line, one TaskSpec each.

Bundled fixture tasks live under userl/fixtures/tasks, one file per gym.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .envs.types import GymKind, TaskSpec
from .errors import SchemaError


def load_tasks(path: str | Path) -> list[TaskSpec]:
    """Read a JSONL task file. Blank lines are skipped; malformed lines fail
    loudly with their line number."""
    tasks: list[TaskSpec] = []
    text = Path(path).read_text(encoding="utf-8")
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}:{number}: not valid JSON: {exc}") from exc
        try:
            tasks.append(TaskSpec.from_dict(record))
        except SchemaError as exc:
            raise SchemaError(f"{path}:{number}: {exc}") from exc
    if not tasks:
        raise SchemaError(f"{path}: no tasks found")
    return tasks


def dump_tasks(tasks: list[TaskSpec], path: str | Path) -> None:
    lines = [json.dumps(task.to_dict(), ensure_ascii=False) for task in tasks]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def fixture_path(gym: GymKind | str) -> Path:
    """Path of the bundled task file for a gym."""
    name = gym.value if isinstance(gym, GymKind) else str(gym)
    root = resources.files("userl") / "fixtures" / "tasks"
    path = Path(str(root / f"{name}.jsonl"))
    if not path.exists():
        raise SchemaError(f"no bundled task file for gym {name!r}")
    return path


def load_fixture_tasks(gym: GymKind | str) -> list[TaskSpec]:
    return load_tasks(fixture_path(gym))
