"""Server selection for an edge-compute job as the epoch length varies."""
from tsks.harness import ExperimentConfig, run_experiment

for epoch in (50, 200, 500):
    cfg = ExperimentConfig.for_environment("edge", horizon=2000, replications=5,
                                           env_params={"mean_epoch": epoch})
    res = run_experiment(cfg)
    row = "  ".join(f"{p} {res.summaries[p].normalized_regret:.4f}" for p in cfg.policies)
    print(f"mean epoch {epoch:3d}: {row}")
