"""
Thompson-sampling policies for piecewise-stationary bandits.

All four variants share one Beta-Bernoulli core:

* ``TS``    -- classical Thompson sampling.
* ``dTS``   -- discounted TS; every arm's counts decay by ``discount`` each step.
* ``TS-CD`` -- TS that resets when the window means of the best arm drift apart.
* ``TS-KS`` -- TS that resets when a two-sample KS test on the best arm fires.

Real-valued rewards are squashed to [0, 1] with :class:`RewardMapper` and
turned into a Bernoulli outcome before the posterior update. The change
detectors see the raw rewards.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .detection import (
    DetectionOutcome,
    DetectorCalibration,
    RewardCache,
    check_change,
    mean_shift_check,
)
from .stats import q_inverse

VARIANTS = ("TS", "dTS", "TS-CD", "TS-KS")

_DETECTOR_FOR = {"TS-CD": mean_shift_check, "TS-KS": check_change}


@dataclass
class BetaPosterior:
    alpha: float = 1.0
    beta: float = 1.0

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


@dataclass(frozen=True)
class RewardMapper:
    """Affine map sending [lower, upper] onto [0, 1].

    ``upper = mu_max + sigma * Qinv(epsilon_b)`` and
    ``lower = mu_min - sigma * Qinv(epsilon_b)``, so a Gaussian reward with
    mean in [mu_min, mu_max] lands inside with probability >= 1 - 2 epsilon_b.
    """

    mu_min: float
    mu_max: float
    sigma: float
    epsilon_b: float = 0.01
    lower: float = field(init=False)
    upper: float = field(init=False)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.mu_max < self.mu_min:
            raise ValueError("mu_max must be >= mu_min")
        margin = self.sigma * q_inverse(self.epsilon_b)
        object.__setattr__(self, "lower", self.mu_min - margin)
        object.__setattr__(self, "upper", self.mu_max + margin)
        if not self.lower < self.upper:
            raise ValueError("epsilon_b too large: mapped interval is empty")

    def __call__(self, raw: float) -> float:
        return map_reward(self, raw)


def map_reward(mapper: RewardMapper, raw: float) -> float:
    value = (raw - mapper.lower) / (mapper.upper - mapper.lower)
    return min(1.0, max(0.0, value))


def posterior_mean_best(alpha: np.ndarray, beta: np.ndarray) -> int:
    """Arm with the largest posterior mean; ties go to the lowest index."""
    return int(np.argmax(alpha / (alpha + beta)))


class ThompsonSampler:
    """One Thompson-sampling agent.

    Parameters
    ----------
    n_arms : int
    variant : {"TS", "dTS", "TS-CD", "TS-KS"}
    mapper : RewardMapper, optional
        Needed unless every update passes ``success_prob``.
    calibration : DetectorCalibration, optional
        Window sizes and thresholds for TS-CD / TS-KS.
    discount : float
        Decay factor for dTS.
    rng : numpy Generator or seed
    """

    def __init__(self, n_arms: int, variant: str = "TS", mapper: RewardMapper | None = None,
                 calibration: DetectorCalibration | None = None, discount: float = 0.95,
                 rng=None):
        if n_arms < 1:
            raise ValueError("need at least one arm")
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
        if variant in _DETECTOR_FOR and calibration is None:
            raise ValueError(f"{variant} needs a DetectorCalibration")
        if variant == "dTS" and not 0.0 < discount <= 1.0:
            raise ValueError("discount must lie in (0, 1]")
        self.n_arms = n_arms
        self.variant = variant
        self.mapper = mapper
        self.calibration = calibration
        self.discount = discount
        self.rng = np.random.default_rng(rng)
        self.alpha = np.ones(n_arms)
        self.beta = np.ones(n_arms)
        self.cache = RewardCache(n_arms)
        self.count = 1
        self.resets = 0
        self._detector = _DETECTOR_FOR.get(variant)
        if calibration is not None:
            self._gate = calibration.warmup_plays + calibration.test_window
            self._need = calibration.estimate_window + calibration.test_window

    @property
    def posteriors(self) -> list[BetaPosterior]:
        return [BetaPosterior(float(a), float(b)) for a, b in zip(self.alpha, self.beta)]

    def select_arm(self) -> int:
        if self.n_arms == 1:
            return 0
        theta = self.rng.beta(self.alpha, self.beta)
        return int(np.argmax(theta))

    def best_arm(self) -> int:
        return posterior_mean_best(self.alpha, self.beta)

    def reset(self) -> None:
        self.alpha[:] = 1.0
        self.beta[:] = 1.0
        self.count = 1
        self.cache.clear()

    def update(self, arm: int, raw_reward: float,
               success_prob: float | None = None) -> DetectionOutcome | None:
        """Record one play and return the detector outcome if a check ran.

        ``success_prob`` overrides the mapped reward as the Bernoulli success
        probability (used for naturally bounded rewards).
        """
        if not 0 <= arm < self.n_arms:
            raise IndexError(f"arm {arm} out of range for {self.n_arms} arms")
        self.cache.append(arm, raw_reward)
        if success_prob is None:
            if self.mapper is None:
                raise ValueError("no RewardMapper configured and no success_prob given")
            success_prob = map_reward(self.mapper, raw_reward)
        x = 1.0 if self.rng.random() < success_prob else 0.0

        if self.variant == "dTS":
            np.maximum(self.alpha * self.discount, 1.0, out=self.alpha)
            np.maximum(self.beta * self.discount, 1.0, out=self.beta)
        self.alpha[arm] += x
        self.beta[arm] += 1.0 - x
        self.count += 1

        if self._detector is None or self.count <= self._gate:
            return None
        best = self.best_arm()
        if self.cache.length(best) < self._need:
            return None
        outcome = self._detector(self.cache, best, self.calibration)
        if outcome.changed:
            self.reset()
            self.resets += 1
        return outcome
