"""
Experiment orchestration and regret accounting.

Replication ``r`` uses seed ``base_seed + r``. Inside a replication every
policy plays its own copy of an environment built from that seed, so all
policies face the same hidden trajectory. Regret is accumulated from the
environment's expected rewards, never from sampled rewards.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy.special import gammaincc

from . import __version__
from .detection import (
    DetectorCalibration,
    RewardCache,
    calibrate,
    check_change,
    mean_shift_check,
)
from .environments import (
    EdgeComputeEnv,
    EpisodeEnd,
    PiecewiseGaussianEnv,
    PortfolioEnv,
)
from .environments.portfolio import PortfolioSpec, Regime, load_prices, synth_prices
from .policies import VARIANTS, RewardMapper, ThompsonSampler, map_reward

N_CHECKPOINTS = 5
ENVIRONMENTS = ("gaussian", "edge", "portfolio")

# Calibration defaults per environment. Rewards in the edge case are
# deadline slack in seconds; portfolio detection sees 0/1 outcomes.
ENV_DEFAULTS: dict[str, dict[str, Any]] = {
    "gaussian": {},
    "edge": dict(horizon=5000, replications=20, sigma=0.01, delta_min=0.01, delta_max=0.4,
                 delta_mu=0.005),
    "portfolio": dict(horizon=100_000, replications=20, sigma=0.5, delta_min=0.5,
                      delta_max=1.0, delta_mu=0.05, p_false_alarm=0.05, estimate_accuracy=None),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a batch of runs.

    ``env_params`` are passed to the environment constructor (for
    ``portfolio``: ``window_days``, ``cap`` and either ``prices`` (a CSV
    path) or ``scenario`` plus ``price_seed``).
    """

    environment: str = "gaussian"
    env_params: Mapping[str, Any] = field(default_factory=dict)
    policies: tuple[str, ...] = VARIANTS
    horizon: int = 10_000
    replications: int = 50
    base_seed: int = 0
    p_false_alarm: float = 0.001
    p_missed: float = 0.1
    p_loc: float = 0.05
    p_change: float = 0.1
    delta_min: float = 0.5
    delta_max: float = 1.5
    delta_mu: float = 0.5
    sigma: float = 0.5
    epsilon_b: float = 0.01
    estimate_accuracy: float | None = 0.2
    warmup_rule: str = "double"
    discount: float = 0.95
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        if self.environment not in ENVIRONMENTS:
            raise ValueError(f"unknown environment {self.environment!r}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        unknown = [p for p in self.policies if p not in VARIANTS]
        if unknown or not self.policies:
            raise ValueError(f"unknown policies {unknown}; choose from {VARIANTS}")
        object.__setattr__(self, "policies", tuple(self.policies))
        object.__setattr__(self, "env_params", dict(self.env_params))
        self.calibration()  # validate eagerly

    def calibration(self) -> DetectorCalibration:
        return calibrate(
            p_false_alarm=self.p_false_alarm, p_missed=self.p_missed,
            delta_min=self.delta_min, delta_max=self.delta_max, sigma=self.sigma,
            p_loc=self.p_loc, delta_mu=self.delta_mu, p_change=self.p_change,
            estimate_accuracy=self.estimate_accuracy, warmup_rule=self.warmup_rule,
        )

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["policies"] = list(self.policies)
        d["env_params"] = dict(self.env_params)
        return d

    @classmethod
    def for_environment(cls, environment: str, **overrides) -> "ExperimentConfig":
        """Config with the calibration defaults tuned for ``environment``."""
        if environment not in ENVIRONMENTS:
            raise ValueError(f"unknown environment {environment!r}")
        kw = dict(ENV_DEFAULTS[environment])
        kw.update(overrides)
        return cls(environment=environment, **kw)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExperimentConfig":
        d = dict(d)
        if "policies" in d:
            d["policies"] = tuple(d["policies"])
        return cls(**d)


@dataclass
class RunRecord:
    policy: str
    replication: int
    seed: int
    arms: np.ndarray
    raw_rewards: np.ndarray
    mapped_rewards: np.ndarray
    oracle_arms: np.ndarray
    oracle_means: np.ndarray
    chosen_means: np.ndarray
    detected: np.ndarray
    changed: np.ndarray

    @property
    def horizon(self) -> int:
        return int(self.arms.shape[0])

    @property
    def regret(self) -> np.ndarray:
        return self.oracle_means - self.chosen_means

    @property
    def cumulative_regret(self) -> np.ndarray:
        return np.cumsum(self.regret)

    @property
    def cumulative_reward(self) -> np.ndarray:
        return np.cumsum(self.raw_rewards)

    @property
    def detection_times(self) -> np.ndarray:
        return np.flatnonzero(self.detected) + 1

    @property
    def change_times(self) -> np.ndarray:
        return np.flatnonzero(self.changed) + 1


@dataclass(frozen=True)
class RegretSummary:
    policy: str
    checkpoints: np.ndarray
    mean_regret: np.ndarray
    std_regret: np.ndarray
    horizon: int

    @property
    def normalized_regret(self) -> float:
        return float(self.mean_regret[-1] / self.horizon)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[RunRecord]
    summaries: dict[str, RegretSummary]

    def by_policy(self, policy: str) -> list[RunRecord]:
        return [r for r in self.records if r.policy == policy]

    def final_regret(self, policy: str) -> np.ndarray:
        return np.array([r.cumulative_regret[-1] for r in self.by_policy(policy)])


# --- environment factories -------------------------------------------------

CRASH_SCENARIO_DAYS = 1260


def crash_scenario() -> list[PortfolioSpec]:
    """Four portfolios over ~5 trading years; the leader crashes at ~60%."""
    return [
        PortfolioSpec(100.0, (Regime(0.0015, 0.01, 750), Regime(-0.006, 0.015, 120),
                              Regime(0.0, 0.01, 390))),
        PortfolioSpec(100.0, (Regime(0.0006, 0.01, 1260),)),
        PortfolioSpec(100.0, (Regime(0.0004, 0.008, 1260),)),
        PortfolioSpec(100.0, (Regime(0.0003, 0.012, 1260),)),
    ]


SCENARIOS: dict[str, Callable[[], list[PortfolioSpec]]] = {"crash": crash_scenario}


def portfolio_prices(env_params: Mapping[str, Any]) -> np.ndarray:
    if env_params.get("prices"):
        return load_prices(env_params["prices"])[1]
    scenario = env_params.get("scenario", "crash")
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown price scenario {scenario!r}")
    rng = np.random.default_rng(int(env_params.get("price_seed", 0)))
    return synth_prices(SCENARIOS[scenario](), rng)


def make_environment(config: ExperimentConfig, seed: int, prices: np.ndarray | None = None):
    params = dict(config.env_params)
    if config.environment == "gaussian":
        params.setdefault("sigma", config.sigma)
        params.setdefault("delta_min", config.delta_min)
        params.setdefault("delta_max", config.delta_max)
        params.setdefault("delta_mu", config.delta_mu)
        return PiecewiseGaussianEnv(seed=seed, **params)
    if config.environment == "edge":
        return EdgeComputeEnv(seed=seed, **params)
    if prices is None:
        prices = portfolio_prices(params)
    return PortfolioEnv(prices, window_days=int(params.get("window_days", 30)),
                        cap=float(params.get("cap", 1000.0)),
                        binary_rewards=bool(params.get("binary_rewards", True)))


# --- running ---------------------------------------------------------------

def run_policy(env, sampler: ThompsonSampler, horizon: int, policy: str = "",
               replication: int = 0, seed: int = 0) -> RunRecord:
    arms = np.zeros(horizon, dtype=np.int64)
    raw = np.zeros(horizon)
    mapped = np.zeros(horizon)
    oracle_arms = np.zeros(horizon, dtype=np.int64)
    oracle_means = np.zeros(horizon)
    chosen_means = np.zeros(horizon)
    detected = np.zeros(horizon, dtype=bool)
    changed = np.zeros(horizon, dtype=bool)
    n = 0
    for t in range(horizon):
        arm = sampler.select_arm()
        try:
            out = env.step(arm)
        except EpisodeEnd:
            break
        prob = out.success_prob
        if prob is None:
            prob = map_reward(sampler.mapper, out.raw_reward)
        observed = prob if getattr(env, "binary_rewards", False) else out.raw_reward
        det = sampler.update(arm, observed, success_prob=prob)
        arms[t] = arm
        raw[t] = out.raw_reward
        mapped[t] = prob
        oracle_arms[t] = out.oracle_optimal_arm
        oracle_means[t] = out.oracle_optimal_mean
        chosen_means[t] = out.chosen_mean
        detected[t] = det is not None and det.changed
        changed[t] = out.change_occurred_this_step
        n = t + 1
    return RunRecord(policy, replication, seed, arms[:n], raw[:n], mapped[:n], oracle_arms[:n],
                     oracle_means[:n], chosen_means[:n], detected[:n], changed[:n])


def _run_replication(args) -> list[RunRecord]:
    config, replication, prices = args
    seed = config.base_seed + replication
    calibration = config.calibration()
    # common random numbers: every policy draws from an identical stream
    policy_seed = np.random.SeedSequence([seed, 1])
    records = []
    for policy in config.policies:
        env = make_environment(config, seed, prices)
        mu_min, mu_max, sigma = env.reward_bounds()
        mapper = RewardMapper(mu_min, mu_max, sigma, config.epsilon_b)
        sampler = ThompsonSampler(env.n_arms, policy, mapper=mapper, calibration=calibration,
                                  discount=config.discount, rng=np.random.default_rng(policy_seed))
        records.append(run_policy(env, sampler, config.horizon, policy, replication, seed))
    return records


def summarize(records: Sequence[RunRecord], policies: Sequence[str]) -> dict[str, RegretSummary]:
    out = {}
    for policy in policies:
        runs = sorted((r for r in records if r.policy == policy), key=lambda r: r.replication)
        if not runs:
            continue
        horizon = min(r.horizon for r in runs)
        checkpoints = np.array([max(1, round(horizon * (k + 1) / N_CHECKPOINTS))
                                for k in range(N_CHECKPOINTS)])
        mat = np.vstack([r.cumulative_regret[checkpoints - 1] for r in runs])
        std = mat.std(axis=0, ddof=1) if len(runs) > 1 else np.zeros(len(checkpoints))
        out[policy] = RegretSummary(policy, checkpoints, mat.mean(axis=0), std, horizon)
    return out


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    prices = portfolio_prices(config.env_params) if config.environment == "portfolio" else None
    jobs = [(config, r, prices) for r in range(config.replications)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(_run_replication, jobs))
    else:
        chunks = [_run_replication(job) for job in jobs]
    records = [rec for chunk in chunks for rec in chunk]
    return ExperimentResult(config, records, summarize(records, config.policies))


# --- theory ----------------------------------------------------------------

def regret_bound(horizon: float, warmup: float, test_window: float, change_rate: float) -> float:
    """Asymptotic regret bound of TS-KS, up to its unspecified constant:

        ln(T_N) * lambda_A * T * Gamma(s, lambda_A T) / Gamma(s),  s = T / (T_N + n_T)

    where Gamma(s, x) is the upper incomplete gamma function.
    """
    for name, v in (("horizon", horizon), ("warmup", warmup), ("test_window", test_window),
                    ("change_rate", change_rate)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    s = horizon / (warmup + test_window)
    x = change_rate * horizon
    ratio = float(gammaincc(s, x))
    if not math.isfinite(ratio):
        raise OverflowError("incomplete gamma ratio overflowed; evaluate in log space")
    return math.log(warmup) * x * ratio


def total_confidence(p_loc: float, p_change: float, p_missed: float) -> float:
    for name, p in (("p_loc", p_loc), ("p_change", p_change), ("p_missed", p_missed)):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    return (1.0 - p_loc) * (1.0 - p_change) * (1.0 - p_missed)


# --- detection delay -------------------------------------------------------

@dataclass(frozen=True)
class DelayResult:
    mean_delay: dict[str, float]
    censored_fraction: dict[str, float]
    delays: dict[str, np.ndarray]
    censor_at: int

    @property
    def difference(self) -> float:
        """KS mean delay minus mean-shift mean delay."""
        return self.mean_delay["ks"] - self.mean_delay["mean"]


def detection_delay_experiment(calibration: DetectorCalibration, shift: float, sigma: float,
                               replications: int, sigma_ratio: float = 1.0, seed: int = 0,
                               mean_calibration: DetectorCalibration | None = None,
                               censor_factor: int = 10) -> DelayResult:
    """Post-change samples each detector needs to fire on a single change.

    Each replication fills a cache with ``N + n_T`` pre-change draws from
    N(0, sigma^2), then appends draws from N(shift, (sigma_ratio sigma)^2)
    one at a time, checking after every draw. Runs that never fire are
    censored at ``censor_factor * n_T`` and count at that value.
    """
    detectors = {
        "ks": (check_change, calibration),
        "mean": (mean_shift_check, mean_calibration or calibration),
    }
    censor_at = censor_factor * calibration.test_window
    rng = np.random.default_rng(seed)
    delays = {k: np.full(replications, censor_at, dtype=float) for k in detectors}
    hit = {k: np.zeros(replications, dtype=bool) for k in detectors}
    for r in range(replications):
        pre_len = max(c.estimate_window + c.test_window for _, c in detectors.values())
        pre = rng.normal(0.0, sigma, pre_len)
        post = rng.normal(shift, sigma * sigma_ratio, censor_at)
        for name, (detector, cal) in detectors.items():
            cache = RewardCache(1)
            cache.extend(0, pre)
            for k in range(censor_at):
                cache.append(0, post[k])
                if detector(cache, 0, cal).changed:
                    delays[name][r] = k + 1
                    hit[name][r] = True
                    break
    return DelayResult(
        mean_delay={k: float(v.mean()) for k, v in delays.items()},
        censored_fraction={k: float(1.0 - h.mean()) for k, h in hit.items()},
        delays=delays,
        censor_at=censor_at,
    )


# --- output ----------------------------------------------------------------

STEP_HEADER = ["step", "policy", "replication", "arm", "raw_reward", "regret", "detected"]
SUMMARY_HEADER = ["policy", "checkpoint", "mean_regret", "std_regret"]


def emit_results(records: Sequence[RunRecord], summaries: Mapping[str, RegretSummary], path,
                 config: ExperimentConfig | None = None) -> dict[str, Path]:
    """Write ``steps.csv``, ``summary.csv`` and ``manifest.json`` under ``path``.

    ``regret`` in ``steps.csv`` is the cumulative regret up to that step.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    files = {"steps": out / "steps.csv", "summary": out / "summary.csv",
             "manifest": out / "manifest.json"}
    with files["steps"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STEP_HEADER)
        for rec in records:
            cum = rec.cumulative_regret
            for t in range(rec.horizon):
                w.writerow([t + 1, rec.policy, rec.replication, int(rec.arms[t]),
                            repr(float(rec.raw_rewards[t])), repr(float(cum[t])),
                            int(rec.detected[t])])
    with files["summary"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for policy, s in summaries.items():
            for c, m, sd in zip(s.checkpoints, s.mean_regret, s.std_regret):
                w.writerow([policy, int(c), repr(float(m)), repr(float(sd))])
    manifest = {
        "toolkit_version": __version__,
        "config": config.to_dict() if config is not None else None,
        "seeds": sorted({int(r.seed) for r in records}),
        "calibration": config.calibration().to_record() if config is not None else None,
    }
    files["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return files


def load_manifest(path) -> ExperimentConfig:
    data = json.loads(Path(path).read_text())
    if not data.get("config"):
        raise ValueError(f"{path}: manifest carries no config")
    return ExperimentConfig.from_dict(data["config"])


def with_overrides(config: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(config, **changes)
