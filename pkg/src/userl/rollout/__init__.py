"""Rollout orchestration: policy clients, episode/group loops, metrics,
and artifact persistence."""
from .episode import RolloutPlan, SessionTranscript, probe_policy, run_episode, run_group
from .metrics import (
    MetricsReport,
    build_report,
    effective_turns,
    time_weighted_performance,
)
from .persist import export_advantages, persist_run, read_jsonl, write_json, write_jsonl
from .policy import (
    INTERACT_TOOL,
    HTTPPolicyClient,
    PolicyEndpoint,
    PolicyReply,
    ScriptedPolicyClient,
    agent_system_prompt,
)

__all__ = [
    "INTERACT_TOOL",
    "HTTPPolicyClient",
    "MetricsReport",
    "PolicyEndpoint",
    "PolicyReply",
    "RolloutPlan",
    "ScriptedPolicyClient",
    "SessionTranscript",
    "agent_system_prompt",
    "build_report",
    "effective_turns",
    "export_advantages",
    "persist_run",
    "probe_policy",
    "read_jsonl",
    "run_episode",
    "run_group",
    "time_weighted_performance",
    "write_json",
    "write_jsonl",
]
