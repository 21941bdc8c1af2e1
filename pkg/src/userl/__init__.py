"""User-centric multi-turn RL engine: gyms, simulated users, reward shaping,
grouped advantages, rollout orchestration, and a tabular policy lab."""

__version__ = "0.1.0"
