from userl.rewards.records import (
    AdvantageTensor,
    RolloutGroup,
    ShapingSpec,
    TerminationReason,
    TrajScheme,
    Trajectory,
    TurnRecord,
    TurnScheme,
    write_advantage_jsonl,
)
from userl.rewards.shaping import (
    broadcast_to_tokens,
    em_map,
    group_advantages,
    reward_to_go,
    score_trajectory,
    shape_turn_rewards,
)

__all__ = [
    "AdvantageTensor",
    "RolloutGroup",
    "ShapingSpec",
    "TerminationReason",
    "TrajScheme",
    "Trajectory",
    "TurnRecord",
    "TurnScheme",
    "broadcast_to_tokens",
    "em_map",
    "group_advantages",
    "reward_to_go",
    "score_trajectory",
    "shape_turn_rewards",
    "write_advantage_jsonl",
]
