"""Regret of the four policies on piecewise-stationary Gaussian arms.

Uses a smaller run than the acceptance suite so it finishes in seconds.
"""
from tsks.harness import ExperimentConfig, run_experiment

cfg = ExperimentConfig(horizon=3000, replications=10, env_params={"change_rate": 1 / 300})
cal = cfg.calibration()
print(f"n_T={cal.test_window} N={cal.estimate_window} T_N={cal.warmup_plays}")

res = run_experiment(cfg)
for policy in cfg.policies:
    s = res.summaries[policy]
    resets = sum(len(r.detection_times) for r in res.by_policy(policy)) / cfg.replications
    print(f"{policy:6s} final regret {s.mean_regret[-1]:8.1f} +- {s.std_regret[-1]:6.1f}"
          f"   resets/run {resets:5.1f}")
