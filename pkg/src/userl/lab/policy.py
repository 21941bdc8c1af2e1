"""Tabular softmax policy over (turn, action) logits."""
from __future__ import annotations

import numpy as np

from .chain_gym import ACTIONS


class TabularPolicy:
    """One logit row per turn index; action distribution is row softmax.

    Each sampled action stands in for a single generated token, so the
    token-broadcast machinery runs unchanged at desk scale.
    """

    def __init__(self, horizon: int, logits: np.ndarray | None = None,
                 temperature: float = 1.0):
        if temperature <= 0:
            raise ValueError("temperature must be positive")
        self.horizon = horizon
        self.temperature = temperature
        if logits is None:
            logits = np.zeros((horizon, len(ACTIONS)))
        logits = np.asarray(logits, dtype=float)
        if logits.shape != (horizon, len(ACTIONS)):
            raise ValueError(f"logits must have shape {(horizon, len(ACTIONS))}")
        if not np.all(np.isfinite(logits)):
            raise ValueError("logits must be finite")
        self.logits = logits

    def action_probabilities(self, turn: int) -> np.ndarray:
        row = self.logits[turn] / self.temperature
        row = row - row.max()  # stable softmax
        exp = np.exp(row)
        return exp / exp.sum()

    def sample_action(self, turn: int, rng: np.random.Generator) -> tuple[int, float]:
        probs = self.action_probabilities(turn)
        index = int(rng.choice(len(ACTIONS), p=probs))
        return index, float(probs[index])

    def greedy_action(self, turn: int) -> int:
        return int(np.argmax(self.action_probabilities(turn)))

    def copy(self) -> "TabularPolicy":
        return TabularPolicy(self.horizon, self.logits.copy(), self.temperature)
