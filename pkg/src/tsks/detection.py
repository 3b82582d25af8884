"""
Window calibration and online change detectors.

The calibration chain runs

    test window n_T  <-  false-alarm / missed-detection targets and shift bounds
    t_ref            <-  n_T and the false-alarm target (DKWM)
    estimate window  <-  an accuracy target for the reference ECDF
    warmup T_N       <-  the inter-arm gap and the estimate window
    max change rate  <-  n_T + T_N and the tolerated change probability

Logarithms are natural throughout. Sample-count bounds are rounded up.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Mapping, Sequence

import numpy as np

from .stats import build_ecdf, erf, ks_two_sample

SQRT2 = math.sqrt(2.0)


class InsufficientSamplesError(ValueError):
    """Raised when a detector is asked to run before its windows are full."""


def _check_probability(name: str, p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"{name} must lie strictly between 0 and 1, got {p}")


def _ceil_bound(x: float) -> int:
    """Smallest integer >= x, forgiving last-bit rounding noise in x."""
    n = math.ceil(x)
    if n - 1 >= x * (1.0 - 1e-12):
        n -= 1
    return max(1, int(n))


def compute_t_ref(test_window: int, p_false_alarm: float) -> float:
    if test_window < 1:
        raise ValueError("test_window must be >= 1")
    _check_probability("p_false_alarm", p_false_alarm)
    return math.sqrt(math.log(2.0 / p_false_alarm) / (2.0 * test_window))


def compute_estimate_window(t_ref: float, p_loc: float) -> int:
    """Samples needed for the reference ECDF to sit within ``t_ref`` of the
    true CDF with probability at least ``1 - p_loc``."""
    if not t_ref > 0:
        raise ValueError("t_ref must be positive")
    _check_probability("p_loc", p_loc)
    return _ceil_bound(math.log(2.0 / p_loc) / (2.0 * t_ref * t_ref))


def warmup_bound(delta_mu: float, estimate_window: int) -> float:
    """Unrounded play count after which the better arm has ~N plays."""
    if not delta_mu > 0:
        raise ValueError("delta_mu must be positive")
    if estimate_window < 1:
        raise ValueError("estimate_window must be >= 1")
    d2 = delta_mu * delta_mu
    try:
        value = 160.0 / d2 * math.log(80.0 / d2) + 2.0 * (48.0 / (d2 * d2) + 18.0 + estimate_window)
    except (OverflowError, ZeroDivisionError) as exc:
        raise ValueError(f"warmup is infeasible for delta_mu={delta_mu}") from exc
    if not math.isfinite(value):
        raise ValueError(f"warmup is infeasible for delta_mu={delta_mu}")
    return value


def compute_warmup(delta_mu: float, estimate_window: int, rule: str = "lemma") -> int:
    """Warmup plays T_N before detection may start.

    ``rule="lemma"`` uses the Thompson-sampling play-count bound;
    ``rule="double"`` is the assumption-free floor ``2 N``. The lemma value
    is never allowed below ``2 N``.
    """
    floor = 2 * int(estimate_window)
    if rule == "double":
        if estimate_window < 1:
            raise ValueError("estimate_window must be >= 1")
        return floor
    if rule != "lemma":
        raise ValueError(f"unknown warmup rule {rule!r}")
    return max(floor, _ceil_bound(warmup_bound(delta_mu, estimate_window)))


def detectable_distance(p_missed: float, delta_min: float, delta_max: float, sigma: float) -> float:
    """Kolmogorov distance of the shift that is missed with probability p_missed."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if delta_min < 0 or delta_max < delta_min:
        raise ValueError("need 0 <= delta_min <= delta_max")
    shift = p_missed * (delta_max - delta_min) + delta_min
    return erf(shift / (2.0 * SQRT2 * sigma))


def window_for_distance(distance: float, p_false_alarm: float) -> int:
    """Smallest n whose DKWM threshold does not exceed ``distance``."""
    _check_probability("p_false_alarm", p_false_alarm)
    if not distance > 0:
        raise ValueError("undetectable configuration: target distance is zero")
    return _ceil_bound(math.log(2.0 / p_false_alarm) / (2.0 * distance * distance))


def power_window(distance: float, p_false_alarm: float, p_missed: float) -> int:
    """Smallest n at which a true distance ``distance`` clears the threshold
    with probability at least ``1 - p_missed``.

    Splits ``distance`` into the DKWM threshold at ``p_false_alarm`` plus a
    DKWM margin at ``p_missed``, so the test ECDF can wander by the margin
    and still exceed the threshold.
    """
    _check_probability("p_false_alarm", p_false_alarm)
    _check_probability("p_missed", p_missed)
    if not distance > 0:
        raise ValueError("undetectable configuration: target distance is zero")
    root = math.sqrt(math.log(2.0 / p_false_alarm) / 2.0) + math.sqrt(math.log(2.0 / p_missed) / 2.0)
    return _ceil_bound((root / distance) ** 2)


def compute_test_window(p_false_alarm: float, p_missed: float, delta_min: float,
                        delta_max: float, sigma: float) -> int:
    _check_probability("p_false_alarm", p_false_alarm)
    if not 0.0 <= p_missed <= 1.0:
        raise ValueError("p_missed must lie in [0, 1]")
    distance = detectable_distance(p_missed, delta_min, delta_max, sigma)
    if distance <= 0:
        raise ValueError("undetectable configuration: the smallest tolerated shift is zero")
    return window_for_distance(distance, p_false_alarm)


def max_change_rate(test_window: int, warmup: int, p_change: float) -> float:
    if test_window < 1 or warmup < 1:
        raise ValueError("test_window and warmup must be positive")
    _check_probability("p_change", p_change)
    return math.log(1.0 / (1.0 - p_change)) / (test_window + warmup)


@dataclass(frozen=True)
class DetectorCalibration:
    p_false_alarm: float
    p_missed: float
    p_loc: float
    p_change: float
    delta_min: float
    delta_max: float
    delta_mu: float
    sigma: float
    estimate_window: int
    test_window: int
    warmup_plays: int
    t_ref: float
    max_change_rate: float

    def __post_init__(self):
        for name in ("p_false_alarm", "p_missed", "p_loc", "p_change"):
            _check_probability(name, getattr(self, name))
        if not 0 <= self.delta_min <= self.delta_max:
            raise ValueError("need 0 <= delta_min <= delta_max")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.estimate_window < 1 or self.test_window < 1 or self.warmup_plays < 1:
            raise ValueError("window sizes must be positive")
        expected = compute_t_ref(self.test_window, self.p_false_alarm)
        if abs(expected - self.t_ref) > 1e-12:
            raise ValueError(
                f"t_ref={self.t_ref} is inconsistent with test_window={self.test_window} "
                f"and p_false_alarm={self.p_false_alarm} (expected {expected})"
            )

    def to_record(self) -> dict[str, str]:
        """Flat string record, lossless for floats."""
        return {k: repr(v) for k, v in asdict(self).items()}

    @classmethod
    def from_record(cls, record: Mapping[str, str]) -> "DetectorCalibration":
        kwargs = {}
        for f in fields(cls):
            raw = record[f.name]
            kwargs[f.name] = int(raw) if f.type in ("int", int) else float(raw)
        return cls(**kwargs)


def calibrate(p_false_alarm: float, p_missed: float, delta_min: float, delta_max: float,
              sigma: float, p_loc: float, delta_mu: float, p_change: float,
              estimate_accuracy: float | None = None, warmup_rule: str = "lemma",
              test_window: int | None = None) -> DetectorCalibration:
    """Derive a full calibration from the error targets.

    Parameters
    ----------
    estimate_accuracy : float, optional
        Sup-distance the reference ECDF must achieve. Defaults to ``t_ref``.
    warmup_rule : {"lemma", "double"}
        See :func:`compute_warmup`.
    test_window : int, optional
        Use this n_T instead of deriving it from the shift bounds.
    """
    if test_window is None:
        test_window = compute_test_window(p_false_alarm, p_missed, delta_min, delta_max, sigma)
    t_ref = compute_t_ref(test_window, p_false_alarm)
    accuracy = t_ref if estimate_accuracy is None else estimate_accuracy
    estimate_window = compute_estimate_window(accuracy, p_loc)
    warmup = compute_warmup(delta_mu, estimate_window, warmup_rule)
    return DetectorCalibration(
        p_false_alarm=p_false_alarm,
        p_missed=p_missed,
        p_loc=p_loc,
        p_change=p_change,
        delta_min=delta_min,
        delta_max=delta_max,
        delta_mu=delta_mu,
        sigma=sigma,
        estimate_window=estimate_window,
        test_window=test_window,
        warmup_plays=warmup,
        t_ref=t_ref,
        max_change_rate=max_change_rate(test_window, warmup, p_change),
    )


class RewardCache:
    """Per-arm chronological record of raw rewards since the last reset."""

    def __init__(self, n_arms: int):
        self._store: list[list[float]] = [[] for _ in range(n_arms)]

    @property
    def n_arms(self) -> int:
        return len(self._store)

    def append(self, arm: int, reward: float) -> None:
        self._store[arm].append(float(reward))

    def extend(self, arm: int, rewards: Sequence[float]) -> None:
        self._store[arm].extend(float(r) for r in rewards)

    def length(self, arm: int) -> int:
        return len(self._store[arm])

    def rewards(self, arm: int) -> list[float]:
        return list(self._store[arm])

    def clear(self) -> None:
        for seq in self._store:
            seq.clear()

    def windows(self, arm: int, test_window: int, estimate_window: int) -> tuple[np.ndarray, np.ndarray]:
        """``(test, estimate)``: the newest ``test_window`` rewards and the
        ``estimate_window`` rewards immediately before them."""
        seq = self._store[arm]
        need = test_window + estimate_window
        if len(seq) < need:
            raise InsufficientSamplesError(
                f"warmup incomplete: arm {arm} has {len(seq)} rewards, detector needs {need}"
            )
        tail = np.asarray(seq[-need:], dtype=float)
        return tail[estimate_window:], tail[:estimate_window]


@dataclass(frozen=True)
class DetectionOutcome:
    changed: bool
    distance: float
    threshold_used: float
    arm_checked: int


def check_change(cache: RewardCache, arm: int, calibration: DetectorCalibration) -> DetectionOutcome:
    """KS detector: flags a change when the raw distance between the test
    and estimate windows exceeds ``t_ref``."""
    test, estimate = cache.windows(arm, calibration.test_window, calibration.estimate_window)
    result = ks_two_sample(build_ecdf(test), build_ecdf(estimate))
    return DetectionOutcome(
        changed=result.distance > calibration.t_ref,
        distance=result.distance,
        threshold_used=calibration.t_ref,
        arm_checked=arm,
    )


def mean_shift_check(cache: RewardCache, arm: int, calibration: DetectorCalibration) -> DetectionOutcome:
    """Mean-comparison baseline: flags a change when the window means differ
    by more than half the smallest shift."""
    test, estimate = cache.windows(arm, calibration.test_window, calibration.estimate_window)
    gap = abs(float(test.mean()) - float(estimate.mean()))
    threshold = 0.5 * calibration.delta_min
    return DetectionOutcome(changed=gap > threshold, distance=gap,
                            threshold_used=threshold, arm_checked=arm)


DETECTORS = {"ks": check_change, "mean": mean_shift_check}
