"""
Empirical CDFs, Kolmogorov distances and the Gaussian helpers behind them.

Everything in this module is a pure function of its inputs.

The two-sample distance is computed exactly: two right-continuous step
functions are constant between consecutive sample points, so the supremum of
their difference is attained at (or immediately left of) a sample point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

SQRT2 = math.sqrt(2.0)

# below this relative gap between the variances the closed form cancels badly
_VARIANCE_GAP_FALLBACK = 1e-6


@dataclass(frozen=True)
class Ecdf:
    """Empirical CDF of a finite sample.

    Parameters
    ----------
    samples : ndarray
        Observations in non-decreasing order.
    """

    samples: np.ndarray

    @property
    def size(self) -> int:
        return int(self.samples.shape[0])

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Fraction of samples <= x. Accepts scalars or arrays."""
        idx = np.searchsorted(self.samples, x, side="right")
        return idx / self.size

    def eval_left(self, x):
        """Left limit F(x-), the fraction of samples strictly below x."""
        idx = np.searchsorted(self.samples, x, side="left")
        return idx / self.size


@dataclass(frozen=True)
class GaussianSpec:
    mean: float
    std_dev: float

    def __post_init__(self):
        if not self.std_dev > 0:
            raise ValueError(f"std_dev must be positive, got {self.std_dev}")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.mean) / (self.std_dev * SQRT2)
        return 0.5 * (1.0 + _erf_array(z))


@dataclass(frozen=True)
class KsTwoSampleResult:
    distance: float
    scaled_statistic: float
    n: int
    m: int


def build_ecdf(values: Sequence[float]) -> Ecdf:
    arr = np.sort(np.asarray(values, dtype=float).ravel())
    if arr.size == 0:
        raise ValueError("empty sample")
    arr.setflags(write=False)
    return Ecdf(arr)


def ks_two_sample(test: Ecdf, estimate: Ecdf) -> KsTwoSampleResult:
    """Two-sample Kolmogorov distance between ``test`` and ``estimate``.

    ``distance`` is the raw sup-norm; ``scaled_statistic`` multiplies it by
    ``sqrt(n m / (n + m))``.
    """
    points = np.concatenate((test.samples, estimate.samples))
    right = np.abs(test.eval(points) - estimate.eval(points))
    left = np.abs(test.eval_left(points) - estimate.eval_left(points))
    distance = float(max(right.max(), left.max()))
    n, m = test.size, estimate.size
    return KsTwoSampleResult(
        distance=distance,
        scaled_statistic=math.sqrt(n * m / (n + m)) * distance,
        n=n,
        m=m,
    )


def ks_distance(test: Sequence[float], estimate: Sequence[float]) -> float:
    """Shortcut returning only the raw two-sample distance."""
    return ks_two_sample(build_ecdf(test), build_ecdf(estimate)).distance


def ks_one_sample(ecdf: Ecdf, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """sup |F_n(x) - F(x)| for a continuous reference CDF ``F``."""
    x = ecdf.samples
    fx = np.asarray(cdf(x), dtype=float)
    upper = np.abs(ecdf.eval(x) - fx)
    lower = np.abs(ecdf.eval_left(x) - fx)
    return float(max(upper.max(), lower.max()))


def dkwm_tail(sample_count: int, threshold: float) -> float:
    """Massart's bound on P(sup |F_n - F| > threshold), capped at 1."""
    if sample_count < 1:
        raise ValueError("sample_count must be a positive integer")
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    return min(1.0, 2.0 * math.exp(-2.0 * sample_count * threshold * threshold))


def gaussian_ks_equal_var(before: GaussianSpec, after: GaussianSpec) -> tuple[float, float]:
    """Kolmogorov distance between two Gaussians sharing a standard deviation.

    Returns ``(distance, argmax)``; the maximum sits halfway between the means.
    """
    if before.std_dev != after.std_dev:
        raise ValueError(
            "standard deviations differ; use gaussian_ks_general for unequal variances"
        )
    gap = abs(before.mean - after.mean)
    distance = erf(gap / (2.0 * SQRT2 * before.std_dev))
    return distance, 0.5 * (before.mean + after.mean)


def gaussian_ks_general(before: GaussianSpec, after: GaussianSpec) -> float:
    """Kolmogorov distance between two Gaussians with arbitrary parameters.

    The CDF difference is stationary where the two densities cross. With
    unequal variances there are two crossings,

        x = (mu1 s0^2 - mu0 s1^2 -/+ y1) / (s0^2 - s1^2),
        y1 = s0 s1 sqrt((mu0 - mu1)^2 + 2 (s0^2 - s1^2) ln(s0 / s1)),

    and the distance is the larger of |F0 - F1| at the two. The distance is
    positive even when the means coincide.
    """
    m0, s0 = before.mean, before.std_dev
    m1, s1 = after.mean, after.std_dev
    if s0 == s1:
        return gaussian_ks_equal_var(before, after)[0]
    var_gap = s0 * s0 - s1 * s1
    if abs(var_gap) < _VARIANCE_GAP_FALLBACK * max(s0, s1) ** 2:
        return _gaussian_ks_numeric(before, after)

    dm = m1 - m0
    y1 = s0 * s1 * math.sqrt(dm * dm + 2.0 * var_gap * math.log(s0 / s1))
    best = 0.0
    for root in (y1, -y1):
        a = (s0 * s0 * dm - root) / (SQRT2 * s0 * var_gap)
        b = (s1 * s1 * dm - root) / (SQRT2 * s1 * var_gap)
        best = max(best, 0.5 * abs(erf(a) - erf(b)))
    return best


def _gaussian_ks_numeric(before: GaussianSpec, after: GaussianSpec) -> float:
    lo = min(before.mean, after.mean) - 8.0 * max(before.std_dev, after.std_dev)
    hi = max(before.mean, after.mean) + 8.0 * max(before.std_dev, after.std_dev)
    grid = np.linspace(lo, hi, 4001)
    diff = np.abs(before.cdf(grid) - after.cdf(grid))
    i = int(np.argmax(diff))
    step = grid[1] - grid[0]

    def neg(x):
        return -abs(float(before.cdf(x)) - float(after.cdf(x)))

    res = minimize_scalar(neg, bounds=(grid[i] - step, grid[i] + step), method="bounded",
                          options={"xatol": 1e-12})
    return max(float(diff[i]), -float(res.fun))


# --- error function family -------------------------------------------------

def erf(x: float) -> float:
    return math.erf(x)


_erf_array = np.vectorize(math.erf, otypes=[float])


def q_function(x: float) -> float:
    """Gaussian tail probability P(Z > x)."""
    return 0.5 * math.erfc(x / SQRT2)


def erf_inverse(p: float, tol: float = 1e-15) -> float:
    """Inverse of erf on (-1, 1) by Newton steps guarded with bisection."""
    if not -1.0 < p < 1.0:
        raise ValueError(f"erf_inverse is defined on (-1, 1), got {p}")
    if p == 0.0:
        return 0.0
    sign = 1.0 if p > 0 else -1.0
    p = abs(p)
    # erf(6) == 1 in double precision
    lo, hi = 0.0, 6.0
    x = _erf_inverse_guess(p)
    for _ in range(100):
        f = math.erf(x) - p
        if f > 0:
            hi = x
        else:
            lo = x
        deriv = 2.0 / math.sqrt(math.pi) * math.exp(-x * x)
        step = f / deriv if deriv > 0 else float("inf")
        nxt = x - step
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= tol * max(1.0, abs(x)):
            x = nxt
            break
        x = nxt
    return sign * x


def _erf_inverse_guess(p: float) -> float:
    # Winitzki's approximation, good to ~2e-3
    a = 0.147
    ln = math.log(1.0 - p * p)
    t = 2.0 / (math.pi * a) + ln / 2.0
    return math.sqrt(math.sqrt(t * t - ln / a) - t)


def q_inverse(p: float, tol: float = 1e-15) -> float:
    """x such that q_function(x) == p, for p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"q_inverse is defined on (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -q_inverse(1.0 - p, tol)
    # q_function is decreasing; bracket on [0, hi]
    lo, hi = 0.0, 1.0
    while q_function(hi) > p:
        hi *= 2.0
    x = SQRT2 * erf_inverse(1.0 - 2.0 * p) if p > 1e-8 else 0.5 * (lo + hi)
    x = min(max(x, lo), hi)
    for _ in range(200):
        f = q_function(x) - p
        if f > 0:
            lo = x
        else:
            hi = x
        deriv = -math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        nxt = x - f / deriv if deriv != 0 else 0.5 * (lo + hi)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= tol * max(1.0, abs(x)):
            return nxt
        x = nxt
    return x
