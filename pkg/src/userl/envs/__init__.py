"""Gym environments and the session lifecycle around them.

Gym modules self-register on first use (see base._ensure_gyms_loaded), so
importing this package stays cheap and cycle-free.
"""
from .base import get_gym, reset, step, validate_task
from .types import (
    ALLOWED_VERBS,
    EnvConfig,
    EnvSession,
    GymKind,
    StepChoice,
    StepOutcome,
    TaskSpec,
    Verb,
    postprocess_reward,
)

__all__ = [
    "ALLOWED_VERBS",
    "EnvConfig",
    "EnvSession",
    "GymKind",
    "StepChoice",
    "StepOutcome",
    "TaskSpec",
    "Verb",
    "get_gym",
    "postprocess_reward",
    "reset",
    "step",
    "validate_task",
]
