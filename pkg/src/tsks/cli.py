"""Command-line entry point: ``tsks {simulate,bounds,delay,edge,portfolio}``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .config import CALIBRATION_KEYS, ConfigError, merge, parse_value, read_config
from .detection import calibrate, compute_estimate_window
from .harness import (
    ENV_DEFAULTS,
    ExperimentConfig,
    detection_delay_experiment,
    emit_results,
    portfolio_prices,
    regret_bound,
    run_experiment,
    total_confidence,
)

# Worked-example inputs used by `bounds` when nothing else is given.
BOUNDS_DEFAULTS = dict(p_false_alarm=0.05, p_missed=0.1, delta_min=0.5, delta_max=1.5, sigma=1.0,
                       p_loc=0.05, delta_mu=0.5, p_change=0.1, estimate_accuracy=0.1,
                       warmup_rule="lemma")

_FLOAT_KEYS = ("p_false_alarm", "p_missed", "p_loc", "p_change", "delta_min", "delta_max",
               "delta_mu", "sigma", "epsilon_b", "discount")


def _optional_float(text: str) -> float | None:
    value = parse_value(text)
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected a number or 'none', got {text!r}") from None


def _key_value(text: str) -> tuple[str, Any]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), parse_value(value)


def _add_calibration_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("calibration")
    for key in _FLOAT_KEYS:
        g.add_argument("--" + key.replace("_", "-"), dest=key, type=float,
                       default=argparse.SUPPRESS)
    g.add_argument("--estimate-accuracy", dest="estimate_accuracy", type=_optional_float,
                   default=argparse.SUPPRESS,
                   help="DKWM accuracy t for the estimate window N ('none' uses t_ref)")
    g.add_argument("--warmup-rule", dest="warmup_rule", choices=("lemma", "double"),
                   default=argparse.SUPPRESS)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI config file or run manifest (JSON)")
    g = p.add_argument_group("experiment")
    g.add_argument("--horizon", type=int, default=argparse.SUPPRESS)
    g.add_argument("--replications", type=int, default=argparse.SUPPRESS)
    g.add_argument("--base-seed", "--seed", dest="base_seed", type=int, default=argparse.SUPPRESS)
    g.add_argument("--policies", nargs="+", default=argparse.SUPPRESS,
                   help="subset of TS dTS TS-CD TS-KS")
    g.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    g.add_argument("--output", type=str, default=argparse.SUPPRESS,
                   help="directory for steps.csv, summary.csv and manifest.json")
    g.add_argument("--set", dest="env_set", action="append", type=_key_value, default=[],
                   metavar="KEY=VALUE", help="environment parameter (repeatable)")
    _add_calibration_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsks", description="Thompson sampling with KS change detection.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", help="piecewise-stationary Gaussian bandit experiment")
    _add_run_flags(p)
    p.add_argument("--change-rate", type=float, default=argparse.SUPPRESS,
                   help="expected changes per step (default 1/300)")
    p.add_argument("--arms", type=int, default=argparse.SUPPRESS)

    p = sub.add_parser("bounds", help="print detector calibration and the regret bound")
    p.add_argument("--config", type=Path)
    p.add_argument("--horizon", type=float, default=argparse.SUPPRESS,
                   help="horizon T for the regret bound (default 10000)")
    _add_calibration_flags(p)

    p = sub.add_parser("delay", help="detection delay of the KS and mean-shift detectors")
    p.add_argument("--config", type=Path)
    p.add_argument("--shift", type=float, default=None, help="mean shift (default delta_max)")
    p.add_argument("--sigma-ratio", type=float, default=1.0)
    p.add_argument("--replications", type=int, default=500)
    p.add_argument("--base-seed", "--seed", dest="base_seed", type=int, default=0)
    _add_calibration_flags(p)

    p = sub.add_parser("edge", help="edge-computing task offloading case study")
    _add_run_flags(p)
    p.add_argument("--mean-epoch", type=float, nargs="+", default=None,
                   help="mean epoch durations in steps (default 50 100 200 300 400 500)")

    p = sub.add_parser("portfolio", help="portfolio investment case study")
    _add_run_flags(p)
    p.add_argument("--prices", type=str, default=argparse.SUPPRESS,
                   help="price CSV (date,portfolio_id,value); default is a synthetic crash")
    p.add_argument("--window-days", type=int, nargs="+", default=None,
                   help="days between investments (default 7 14 21 30)")
    p.add_argument("--cap", type=float, default=argparse.SUPPRESS)
    p.add_argument("--price-seed", type=int, default=argparse.SUPPRESS)
    return parser


def _config_file(ns) -> dict[str, Any]:
    return read_config(ns.config) if getattr(ns, "config", None) else {}


def _flag_overrides(ns, env_keys: Sequence[str] = ()) -> dict[str, Any]:
    keys = ("horizon", "replications", "base_seed", "policies", "workers", "output",
            *CALIBRATION_KEYS)
    out = {k: getattr(ns, k) for k in keys if hasattr(ns, k)}
    if "policies" in out:
        out["policies"] = tuple(out["policies"])
    env = dict(getattr(ns, "env_set", []))
    for key in env_keys:
        if hasattr(ns, key):
            env[key] = getattr(ns, key)
    if env:
        out["env_params"] = env
    return out


def _experiment_config(environment: str, ns, env_keys: Sequence[str] = ()) -> ExperimentConfig:
    base = dict(ENV_DEFAULTS[environment], environment=environment)
    d = merge(merge(base, _config_file(ns)), _flag_overrides(ns, env_keys))
    d["environment"] = environment
    return ExperimentConfig.from_dict(d)


def _print_summary(result, out) -> None:
    print(f"{'policy':<7} {'final regret':>14} {'std':>12} {'regret/T':>12} {'reward':>12}",
          file=out)
    for policy in result.config.policies:
        s = result.summaries[policy]
        reward = np.mean([r.cumulative_reward[-1] if r.horizon else 0.0
                          for r in result.by_policy(policy)])
        print(f"{policy:<7} {s.mean_regret[-1]:14.6g} {s.std_regret[-1]:12.6g} "
              f"{s.normalized_regret:12.6g} {reward:12.6g}", file=out)


def _run_and_report(config: ExperimentConfig, out, output: str | None = None) -> None:
    result = run_experiment(config)
    _print_summary(result, out)
    if output:
        files = emit_results(result.records, result.summaries, output, config)
        print(f"wrote {files['steps'].parent}", file=out)


def cmd_simulate(ns, out) -> None:
    config = _experiment_config("gaussian", ns, env_keys=("change_rate",))
    if hasattr(ns, "arms"):
        config = ExperimentConfig.from_dict(
            merge(config.to_dict(), {"env_params": {"n_arms": ns.arms}}))
    print(f"calibration: {config.calibration()}", file=out)
    _run_and_report(config, out, config.output)


def cmd_edge(ns, out) -> None:
    config = _experiment_config("edge", ns)
    epochs = ns.mean_epoch or ([config.env_params["mean_epoch"]]
                               if "mean_epoch" in config.env_params
                               else [50, 100, 200, 300, 400, 500])
    print(f"calibration: {config.calibration()}", file=out)
    for epoch in epochs:
        cfg = ExperimentConfig.from_dict(merge(config.to_dict(), {
            "env_params": {"mean_epoch": epoch},
            "output": str(Path(config.output) / f"mean_epoch_{epoch:g}") if config.output else None,
        }))
        print(f"\nmean epoch {epoch:g} steps", file=out)
        _run_and_report(cfg, out, cfg.output)


def cmd_portfolio(ns, out) -> None:
    config = _experiment_config("portfolio", ns, env_keys=("prices", "cap", "price_seed"))
    windows = ns.window_days or ([config.env_params["window_days"]]
                                 if "window_days" in config.env_params else [7, 14, 21, 30])
    portfolio_prices(config.env_params)  # fail on a bad price file before any run
    print(f"calibration: {config.calibration()}", file=out)
    for days in windows:
        cfg = ExperimentConfig.from_dict(merge(config.to_dict(), {
            "env_params": {"window_days": days},
            "output": str(Path(config.output) / f"window_{days}") if config.output else None,
        }))
        print(f"\nwindow {days} days", file=out)
        _run_and_report(cfg, out, cfg.output)


def _calibration_inputs(ns, base: dict[str, Any]) -> dict[str, Any]:
    d = dict(base)
    d.update({k: v for k, v in _config_file(ns).items() if k in CALIBRATION_KEYS})
    d.update({k: getattr(ns, k) for k in CALIBRATION_KEYS if hasattr(ns, k)})
    return d


def cmd_bounds(ns, out) -> None:
    d = _calibration_inputs(ns, BOUNDS_DEFAULTS)
    d.pop("epsilon_b", None)
    d.pop("discount", None)
    cal = calibrate(**d)
    horizon = getattr(ns, "horizon", 10_000.0)
    implied_n = compute_estimate_window(cal.t_ref, cal.p_loc)
    accuracy = d.get("estimate_accuracy")
    at = f"t={accuracy:g}" if accuracy is not None else "the implied t_ref"
    print(f"test window n_T         = {cal.test_window}", file=out)
    print(f"reference distance t_ref = {cal.t_ref:.6g}", file=out)
    print(f"estimate window N        = {cal.estimate_window}  (at {at})", file=out)
    print(f"N at the implied t_ref   = {implied_n}", file=out)
    print(f"warmup plays T_N         = {cal.warmup_plays}  (rule: {d.get('warmup_rule', 'lemma')})",
          file=out)
    print(f"max change rate lambda_A = {cal.max_change_rate:.6g}", file=out)
    print(f"total confidence p_tot   = "
          f"{total_confidence(cal.p_loc, cal.p_change, cal.p_missed):.6g}", file=out)
    bound = regret_bound(horizon, cal.warmup_plays, cal.test_window, cal.max_change_rate)
    print(f"regret bound at T={horizon:g} = {bound:.6g}  (up to the bound's constant)", file=out)


def cmd_delay(ns, out) -> None:
    d = _calibration_inputs(ns, {k: v for k, v in ExperimentConfig().to_dict().items()
                                 if k in CALIBRATION_KEYS})
    sigma = d["sigma"]
    d.pop("epsilon_b", None)
    d.pop("discount", None)
    cal = calibrate(**d)
    shift = cal.delta_max if ns.shift is None else ns.shift
    res = detection_delay_experiment(cal, shift, sigma, ns.replications,
                                     sigma_ratio=ns.sigma_ratio, seed=ns.base_seed)
    print(f"calibration: {cal}", file=out)
    print(f"shift {shift:g}, sigma {sigma:g}, sigma ratio {ns.sigma_ratio:g}, "
          f"censored at {res.censor_at} samples", file=out)
    for name in ("ks", "mean"):
        print(f"{name:<5} mean delay {res.mean_delay[name]:8.3f}  "
              f"censored {res.censored_fraction[name]:.3f}", file=out)
    print(f"difference (ks - mean) {res.difference:.3f}", file=out)


COMMANDS = {"simulate": cmd_simulate, "bounds": cmd_bounds, "delay": cmd_delay,
            "edge": cmd_edge, "portfolio": cmd_portfolio}


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[ns.command](ns, out)
    except (ValueError, TypeError, OSError, ConfigError) as exc:
        print(f"tsks {ns.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
