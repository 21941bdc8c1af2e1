"""Stub for tool-use customer-service tasks served by an external framework.

The engine does not reimplement that framework's databases or reward
checkers. This module keeps the task kind schema-valid (so task files can
carry such tasks through loaders and reports) while refusing to open a
session until an adapter is registered.

Adapter contract: replace this stub via `userl.envs.base.register` with an
implementation whose transition
  * accepts all three verbs,
  * proxies action/search/answer to the external environment, and
  * maps its terminal check to a single end-of-session reward in [0, 1].
"""
from __future__ import annotations

from ..errors import SchemaError, UnsupportedGym
from .base import StepContext, register
from .types import EnvConfig, GymKind, StepChoice, StepOutcome


class TauStubGym:
    kind = GymKind.TAU_STUB

    def validate_payload(self, payload: dict) -> None:
        if not isinstance(payload, dict):
            raise SchemaError("tau_stub payload must be an object")

    def build_state(self, payload: dict, config: EnvConfig) -> None:
        raise UnsupportedGym(
            "tau_stub tasks need an external adapter; see userl.envs.tau_gym "
            "for the adapter contract")

    def transition(self, state, choice: StepChoice, ctx: StepContext) -> StepOutcome:
        raise UnsupportedGym("tau_stub has no in-process transition")


register(TauStubGym())
