"""Desk-scale training lab: tabular policy on a synthetic chain gym."""
from .chain_gym import (
    ACTIONS,
    DEFAULT_HORIZON,
    MAX_PAID_PROBES,
    MAX_TRAJECTORY_SUM,
    PROBE_REWARD,
    SOLVE_REWARD,
    ChainGym,
    ChainState,
)
from .compare import (
    SMOOTH_SIGMA,
    CompareReport,
    SettingRun,
    compare_settings,
    parse_setting,
    smooth_curve,
    summary_table,
    write_report,
)
from .policy import TabularPolicy
from .training import (
    CHAIN_TASK_ID,
    EpochStats,
    EvalStats,
    TrainResult,
    UpdateBatch,
    build_batch,
    evaluate,
    sample_group,
    sample_trajectory,
    surrogate_gradient,
    surrogate_objective,
    surrogate_term,
    train,
    update_policy,
)

__all__ = [
    "ACTIONS",
    "CHAIN_TASK_ID",
    "DEFAULT_HORIZON",
    "MAX_PAID_PROBES",
    "MAX_TRAJECTORY_SUM",
    "PROBE_REWARD",
    "SMOOTH_SIGMA",
    "SOLVE_REWARD",
    "ChainGym",
    "ChainState",
    "CompareReport",
    "EpochStats",
    "EvalStats",
    "SettingRun",
    "TabularPolicy",
    "TrainResult",
    "UpdateBatch",
    "build_batch",
    "compare_settings",
    "evaluate",
    "parse_setting",
    "sample_group",
    "sample_trajectory",
    "smooth_curve",
    "summary_table",
    "surrogate_gradient",
    "surrogate_objective",
    "surrogate_term",
    "train",
    "update_policy",
    "write_report",
]
