"""Picking a portfolio on a synthetic price path with a crash.

Each play invests for a fixed number of days. The reward is the
unrealised return of the holding; the policies see whether it was positive.
"""
import numpy as np

from tsks.harness import ExperimentConfig, run_experiment

for days in (7, 30):
    cfg = ExperimentConfig.for_environment("portfolio", replications=5,
                                           env_params={"window_days": days})
    res = run_experiment(cfg)
    finals = {p: np.mean([r.cumulative_reward[-1] for r in res.by_policy(p)])
              for p in cfg.policies}
    print(f"window {days:2d} days: " + "  ".join(f"{p} {v:9.1f}" for p, v in finals.items()))
