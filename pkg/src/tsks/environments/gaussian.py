"""Piecewise-stationary Gaussian bandit with Poisson change points."""
from __future__ import annotations

import math

import numpy as np

from .base import StepOutcome

MAX_CHANGE_RETRIES = 1000


class InfeasibleChangeError(RuntimeError):
    pass


def draw_gap(rng: np.random.Generator, change_rate: float) -> float:
    """Steps until the next change; P(gap <= k) = 1 - exp(-rate k) at integers."""
    if change_rate <= 0:
        return math.inf
    return max(1.0, math.ceil(rng.exponential(1.0 / change_rate)))


class PiecewiseGaussianEnv:
    """K Gaussian arms whose means jump together at Poisson times.

    At each change every arm moves by an independent magnitude drawn
    uniformly from ``[delta_min, delta_max]``. Signs are random but the new
    means must stay in ``[mu_min, mu_max]`` and keep pairwise gaps of at
    least ``delta_mu``; infeasible draws are resampled.

    Two independent streams drive the episode: ``trajectory`` (change times
    and new means) and ``noise`` (one standard normal per step). Neither
    depends on the arms played, so two policies run against copies built from
    the same seed face the same hidden trajectory and the same noise.
    """

    def __init__(self, n_arms: int = 2, sigma: float = 0.5, change_rate: float = 1 / 300,
                 delta_min: float = 0.5, delta_max: float = 1.5, delta_mu: float = 0.5,
                 mu_min: float = 0.0, mu_max: float = 3.0, initial_means=None, seed=None):
        if n_arms < 1:
            raise ValueError("n_arms must be >= 1")
        if sigma < 0:
            raise ValueError("sigma must be non-negative")
        if not 0 <= delta_min <= delta_max:
            raise ValueError("need 0 <= delta_min <= delta_max")
        if mu_max < mu_min:
            raise ValueError("mu_max must be >= mu_min")
        self.n_arms = n_arms
        self.sigma = float(sigma)
        self.change_rate = float(change_rate)
        self.delta_min = float(delta_min)
        self.delta_max = float(delta_max)
        self.delta_mu = float(delta_mu)
        self.mu_min = float(mu_min)
        self.mu_max = float(mu_max)
        traj_seq, noise_seq = np.random.SeedSequence(seed).spawn(2)
        self.trajectory = np.random.default_rng(traj_seq)
        self.noise = np.random.default_rng(noise_seq)
        if initial_means is None:
            self.means = self._initial_means()
        else:
            self.means = np.asarray(initial_means, dtype=float).copy()
            if self.means.shape != (n_arms,):
                raise ValueError("initial_means must have one entry per arm")
        self.t = 0
        self.next_change = draw_gap(self.trajectory, self.change_rate)
        self.change_times: list[int] = []

    def reward_bounds(self) -> tuple[float, float, float]:
        return self.mu_min, self.mu_max, max(self.sigma, 1e-12)

    def _gaps_ok(self, means: np.ndarray) -> bool:
        if self.n_arms < 2:
            return True
        s = np.sort(means)
        return bool(np.all(np.diff(s) >= self.delta_mu))

    def _initial_means(self) -> np.ndarray:
        for _ in range(MAX_CHANGE_RETRIES):
            means = self.trajectory.uniform(self.mu_min, self.mu_max, self.n_arms)
            if self._gaps_ok(means):
                return means
        raise InfeasibleChangeError("infeasible change configuration: cannot place initial means")

    def apply_change(self) -> None:
        self.means = propose_change(self.means, self.trajectory, self.delta_min, self.delta_max,
                                    self.delta_mu, self.mu_min, self.mu_max)

    def expected_rewards(self) -> np.ndarray:
        return self.means.copy()

    def step(self, arm: int) -> StepOutcome:
        self.t += 1
        changed = False
        while self.t >= self.next_change:
            self.apply_change()
            self.change_times.append(self.t)
            self.next_change += draw_gap(self.trajectory, self.change_rate)
            changed = True
        z = self.noise.standard_normal()
        best = int(np.argmax(self.means))
        return StepOutcome(
            raw_reward=float(self.means[arm] + self.sigma * z),
            oracle_optimal_arm=best,
            oracle_optimal_mean=float(self.means[best]),
            chosen_mean=float(self.means[arm]),
            change_occurred_this_step=changed,
        )


def propose_change(means: np.ndarray, rng: np.random.Generator, delta_min: float,
                   delta_max: float, delta_mu: float, mu_min: float, mu_max: float) -> np.ndarray:
    """New means after one change point; see :class:`PiecewiseGaussianEnv`."""
    k = len(means)
    for _ in range(MAX_CHANGE_RETRIES):
        mags = rng.uniform(delta_min, delta_max, k)
        coin = rng.random(k)
        new = np.empty(k)
        ok = True
        for i in range(k):
            up_ok = means[i] + mags[i] <= mu_max
            down_ok = means[i] - mags[i] >= mu_min
            if up_ok and down_ok:
                sign = 1.0 if coin[i] < 0.5 else -1.0
            elif up_ok:
                sign = 1.0
            elif down_ok:
                sign = -1.0
            else:
                ok = False
                break
            new[i] = means[i] + sign * mags[i]
        if not ok:
            continue
        if k < 2 or np.all(np.diff(np.sort(new)) >= delta_mu):
            return new
    raise InfeasibleChangeError("infeasible change configuration")
