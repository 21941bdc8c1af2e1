"""Command-line front end: rollouts, evaluation, advantage export, replay,
the live human bridge server, and the training lab.

Every flag can also come from a YAML or JSON config file (--config); values
given on the command line win over the file, which wins over defaults.
"""
from __future__ import annotations

import json
from pathlib import Path

import click
import yaml

from .envs import EnvConfig, GymKind, reset, step
from .errors import AbortedGroup, GroupTooSmall, UserlError
from .rewards import ShapingSpec, Trajectory, group_advantages
from .rollout import (
    HTTPPolicyClient,
    PolicyEndpoint,
    RolloutPlan,
    persist_run,
    probe_policy,
    read_jsonl,
    run_group,
    write_jsonl,
)
from .tasks import load_tasks
from .users import ChatEndpoint, LLMUserPort, ReplayUserPort, Role


def _read_config(path: str | None) -> dict:
    if not path:
        return {}
    text = Path(path).read_text(encoding="utf-8")
    data = yaml.safe_load(text)  # JSON is a YAML subset
    if not isinstance(data, dict):
        raise click.ClickException(f"config {path} must hold a mapping")
    return {str(key).replace("-", "_"): value for key, value in data.items()}


def _merged(ctx: click.Context, config: dict) -> dict:
    """Command line beats config file beats declared default."""
    from click.core import ParameterSource

    values = dict(ctx.params)
    for name, value in config.items():
        if name not in values:
            raise click.ClickException(f"unknown config key {name!r}")
        if ctx.get_parameter_source(name) != ParameterSource.COMMANDLINE:
            values[name] = value
    return values


def _require(values: dict, *names: str) -> None:
    """Required values may come from the flag or the config file, so the
    check has to run after the merge rather than inside click."""
    for name in names:
        if values.get(name) is None:
            raise click.ClickException(
                f"missing required value for --{name.replace('_', '-')} "
                "(flag or config)")


def _parse_user_endpoints(raw: tuple[str, ...], model: str) -> LLMUserPort | None:
    """role=url pairs, comma separated or repeated; '*' binds the default."""
    bindings = {}
    for chunk in raw:
        for pair in chunk.split(","):
            pair = pair.strip()
            if not pair:
                continue
            if "=" not in pair:
                raise click.ClickException(
                    f"--user-endpoint wants role=url, got {pair!r}")
            role_name, url = pair.split("=", 1)
            role_name = role_name.strip()
            key = "*" if role_name == "*" else None
            if key is None:
                try:
                    key = Role(role_name)
                except ValueError:
                    raise click.ClickException(
                        f"unknown user role {role_name!r}; use "
                        f"{'/'.join(r.value for r in Role)} or '*'")
            bindings[key] = ChatEndpoint(base_url=url.strip(), model=model)
    return LLMUserPort(role_bindings=bindings) if bindings else None


def _shaping_from(values: dict) -> ShapingSpec:
    return ShapingSpec(
        turn_scheme=values["turn_shaping"],
        traj_scheme=values["traj_score"],
        gamma=values["gamma"],
        k=values["k"],
        eta=values["eta"],
    )


def _select_tasks(values: dict) -> list:
    tasks = load_tasks(values["tasks"])
    if values.get("gym"):
        wanted = GymKind(values["gym"])
        tasks = [task for task in tasks if task.gym_kind is wanted]
    if not tasks:
        raise click.ClickException("no tasks matched the request")
    return tasks


def config_option(f):
    return click.option("--config", type=click.Path(exists=True, dir_okay=False),
                        default=None, help="YAML/JSON file mirroring the flags.")(f)


def shaping_options(f):
    for deco in (
        click.option("--eta", type=float, default=1e-6, show_default=True),
        click.option("--k", type=float, default=2.0, show_default=True),
        click.option("--gamma", type=float, default=0.8, show_default=True),
        click.option("--traj-score", type=click.Choice(["sum", "r2g"]),
                     default="r2g", show_default=True),
        click.option("--turn-shaping",
                     type=click.Choice(["naive", "equalized", "r2g", "em"]),
                     default="equalized", show_default=True),
    ):
        f = deco(f)
    return f


def run_options(f):
    for deco in (
        click.option("--concurrency", type=int, default=8, show_default=True),
        click.option("--allow-aborted", is_flag=True, default=False,
                     help="Export advantages even for flagged groups."),
        click.option("--out", type=click.Path(file_okay=False), default=None),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--max-turns", type=int, default=16, show_default=True),
        click.option("--model", default="policy", show_default=True,
                     help="Model name sent to the policy endpoint."),
        click.option("--user-endpoint", multiple=True,
                     help="role=url[,role=url...]; '*' is the fallback role."),
        click.option("--policy-endpoint", default=None,
                     help="Base URL of the chat-completions policy server."),
        click.option("--tasks", type=click.Path(exists=True, dir_okay=False),
                     default=None),
        click.option("--gym", type=click.Choice([g.value for g in GymKind]),
                     default=None, help="Restrict the task file to one gym."),
    ):
        f = deco(f)
    return f


@click.group()
def main():
    """Multi-turn gym rollouts with turn-level reward shaping."""


def _execute_run(ctx, config, temperature, default_group_size, export_spec):
    values = _merged(ctx, _read_config(config))
    _require(values, "tasks", "policy_endpoint", "out")
    if values.get("group_size") is None:
        values["group_size"] = default_group_size
    tasks = _select_tasks(values)
    spec = _shaping_from(values)
    policy = HTTPPolicyClient(PolicyEndpoint(
        base_url=values["policy_endpoint"],
        model=values["model"],
        temperature=temperature,
    ))
    plan = RolloutPlan(
        policy=policy,
        user=_parse_user_endpoints(tuple(values["user_endpoint"] or ()),
                                   model=values["model"]),
        group_size=values["group_size"],
        max_turns=values["max_turns"],
        shaping=spec,
        seed=values["seed"],
        concurrency=values["concurrency"],
    )
    try:
        probe_policy(plan)
    except UserlError as exc:
        raise click.ClickException(f"policy endpoint probe failed: {exc}")

    groups, transcripts = [], []
    for task in tasks:
        group, group_transcripts = run_group(plan, task)
        groups.append(group)
        transcripts.extend(group_transcripts)

    advantage_spec = spec if export_spec and values["group_size"] >= 2 else None
    try:
        paths, report = persist_run(
            groups, transcripts, {t.task_id: t for t in tasks}, values["out"],
            spec=advantage_spec, allow_aborted=values["allow_aborted"])
    except (AbortedGroup, GroupTooSmall) as exc:
        raise click.ClickException(str(exc))
    click.echo(report.format_table())
    for name, path in paths.items():
        click.echo(f"{name}: {path}")


@main.command()
@run_options
@shaping_options
@click.option("--group-size", type=int, default=None,
              help="Trajectories per task [default: 8].")
@config_option
@click.pass_context
def rollout(ctx, config, **_kwargs):
    """Training-style rollouts (temperature 1.0) with advantage export."""
    _execute_run(ctx, config, temperature=1.0, default_group_size=8,
                 export_spec=True)


@main.command(name="eval")
@run_options
@shaping_options
@click.option("--group-size", type=int, default=None,
              help="Trajectories per task [default: 1].")
@config_option
@click.pass_context
def eval_cmd(ctx, config, **_kwargs):
    """Deterministic evaluation (temperature 0.0); metrics only."""
    _execute_run(ctx, config, temperature=0.0, default_group_size=1,
                 export_spec=False)


def _load_groups(run_dir: str) -> list:
    """Rebuild RolloutGroups from a persisted trajectories.jsonl."""
    from .rewards import RolloutGroup

    path = Path(run_dir) / "trajectories.jsonl"
    if not path.exists():
        raise click.ClickException(f"{path} not found")
    by_group: dict[int, list] = {}
    for record in read_jsonl(path):
        by_group.setdefault(record["group_index"], []).append(record)
    groups = []
    for index in sorted(by_group):
        records = sorted(by_group[index], key=lambda r: r["trajectory_index"])
        trajectories = [Trajectory.from_dict(r) for r in records]
        groups.append(RolloutGroup(task_id=trajectories[0].task_id,
                                   trajectories=trajectories))
    return groups


@main.command()
@click.option("--run-dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="Directory holding trajectories.jsonl.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@shaping_options
@click.option("--allow-aborted", is_flag=True, default=False)
@config_option
@click.pass_context
def advantages(ctx, config, **_kwargs):
    """Recompute grouped advantages for a persisted run."""
    values = _merged(ctx, _read_config(config))
    _require(values, "run_dir", "out")
    spec = _shaping_from(values)
    groups = _load_groups(values["run_dir"])
    records = []
    try:
        for group in groups:
            if len(group) < 2:
                raise GroupTooSmall(
                    f"task {group.task_id!r}: advantage export needs a group "
                    f"of >= 2 trajectories, got {len(group)}")
            if group.aborted and not values["allow_aborted"]:
                raise AbortedGroup(
                    f"task {group.task_id!r}: group holds aborted "
                    "trajectories; pass --allow-aborted to export anyway")
            records.extend(t.to_record() for t in group_advantages(group, spec))
    except (AbortedGroup, GroupTooSmall) as exc:
        raise click.ClickException(str(exc))
    path = write_jsonl(records, values["out"])
    click.echo(f"advantages: {path} ({len(records)} records)")


@main.command()
@click.option("--run-dir", type=click.Path(exists=True, file_okay=False),
              default=None)
@click.option("--tasks", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--max-turns", type=int, default=16, show_default=True)
@config_option
@click.pass_context
def replay(ctx, config, **_kwargs):
    """Re-drive persisted trajectories through fresh sessions and verify
    that every recorded reward reproduces exactly."""
    values = _merged(ctx, _read_config(config))
    _require(values, "run_dir", "tasks")
    tasks = {task.task_id: task for task in load_tasks(values["tasks"])}
    records = read_jsonl(Path(values["run_dir"]) / "trajectories.jsonl")
    failures = 0
    for record in records:
        trajectory = Trajectory.from_dict(record)
        label = (f"{trajectory.task_id} "
                 f"group={record.get('group_index', '?')} "
                 f"idx={record.get('trajectory_index', '?')}")
        task = tasks.get(trajectory.task_id)
        if task is None:
            failures += 1
            click.echo(f"MISSING TASK {label}")
            continue
        replies = [call["fields"] for turn in trajectory.turns
                   for call in turn.info.get("user_calls", [])]
        session = reset(task, EnvConfig(max_steps=max(values["max_turns"],
                                                      len(trajectory.turns))),
                        user=ReplayUserPort(replies=replies))
        replayed = []
        try:
            for turn in trajectory.turns:
                replayed.append(step(session, turn.choice).raw_reward)
        except UserlError as exc:
            failures += 1
            click.echo(f"ERROR {label}: {exc}")
            continue
        if replayed == trajectory.rewards:
            click.echo(f"ok {label}")
        else:
            failures += 1
            click.echo(f"MISMATCH {label}: {trajectory.rewards} -> {replayed}")
    if failures:
        raise click.ClickException(f"{failures} trajectory(ies) failed replay")
    click.echo(f"replayed {len(records)} trajectories bit-identically")


@main.command(name="human-serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8787, show_default=True)
@click.option("--tasks", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--gym", type=click.Choice([g.value for g in GymKind]),
              default=None)
@click.option("--task-id", default=None, help="Serve one specific task.")
@click.option("--max-turns", type=int, default=16, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--agent-script", type=click.Path(exists=True, dir_okay=False),
              default=None,
              help="JSON list of scripted agent moves instead of a live "
                   "policy endpoint.")
@click.option("--policy-endpoint", default=None,
              help="Chat-completions URL driving the agent side.")
@click.option("--model", default="policy", show_default=True)
@click.option("--reply-deadline", type=float, default=300.0, show_default=True,
              help="Seconds a pending human reply may take before timeout.")
@click.option("--once", is_flag=True, default=False,
              help="Exit after every served session finishes.")
@config_option
@click.pass_context
def human_serve(ctx, config, **_kwargs):
    """Serve live sessions where a human plays the user role."""
    values = _merged(ctx, _read_config(config))
    _require(values, "tasks")
    if not values["agent_script"] and not values["policy_endpoint"]:
        raise click.ClickException(
            "need --agent-script or --policy-endpoint to drive the agent")
    from .rollout.serve import serve_human_sessions

    tasks = _select_tasks(values)
    if values["task_id"]:
        tasks = [t for t in tasks if t.task_id == values["task_id"]]
        if not tasks:
            raise click.ClickException(f"task {values['task_id']!r} not found")
    serve_human_sessions(
        tasks=tasks,
        host=values["host"],
        port=values["port"],
        max_turns=values["max_turns"],
        seed=values["seed"],
        agent_script=values["agent_script"],
        policy_endpoint=values["policy_endpoint"],
        model=values["model"],
        reply_deadline=values["reply_deadline"],
        once=values["once"],
    )


@main.group()
def lab():
    """Desk-scale tabular training experiments."""


@lab.command()
@click.option("--settings", default="equalized/sum,equalized/r2g,em/r2g,r2g/r2g",
              show_default=True, help="Comma-separated turn/traj pairs.")
@click.option("--epochs", type=int, default=200, show_default=True)
@click.option("--seeds", type=int, default=3, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--group-size", type=int, default=8, show_default=True)
@click.option("--groups-per-epoch", type=int, default=4, show_default=True)
@click.option("--learning-rate", type=float, default=1.0, show_default=True)
@click.option("--horizon", type=int, default=8, show_default=True)
@config_option
@click.pass_context
def compare(ctx, config, **_kwargs):
    """Train every shaping setting on the chain gym and report curves."""
    from .lab import compare_settings, summary_table, write_report

    values = _merged(ctx, _read_config(config))
    _require(values, "out")
    names = [s.strip() for s in values["settings"].split(",") if s.strip()]
    try:
        report = compare_settings(
            names, epochs=values["epochs"], seeds=values["seeds"],
            group_size=values["group_size"],
            groups_per_epoch=values["groups_per_epoch"],
            learning_rate=values["learning_rate"], horizon=values["horizon"])
    except ValueError as exc:
        raise click.ClickException(str(exc))
    paths = write_report(report, values["out"])
    click.echo(summary_table(report))
    for name, path in paths.items():
        click.echo(f"{name}: {path}")


if __name__ == "__main__":
    main()
