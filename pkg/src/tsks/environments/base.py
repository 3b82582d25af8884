from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol


class EpisodeEnd(Exception):
    """The environment has no more steps (e.g. the price series ran out)."""


@dataclass(frozen=True)
class StepOutcome:
    """What one play returns.

    ``raw_reward`` feeds the change detectors. ``success_prob``, when set,
    replaces the mapped raw reward as the Bernoulli success probability.
    ``chosen_mean`` and ``oracle_optimal_mean`` are expected rewards under the
    hidden state, used for regret.
    """

    raw_reward: float
    oracle_optimal_arm: int
    oracle_optimal_mean: float
    chosen_mean: float
    change_occurred_this_step: bool
    success_prob: float | None = None

    @property
    def regret(self) -> float:
        return self.oracle_optimal_mean - self.chosen_mean


class Environment(Protocol):
    n_arms: int

    def step(self, arm: int) -> StepOutcome: ...

    def reward_bounds(self) -> tuple[float, float, float]:
        """``(mu_min, mu_max, sigma)`` for building a RewardMapper."""
        ...
