"""
Periodic buy-only investment across a set of portfolios.

Every ``window_days`` days the investor picks a portfolio k and spends up to
``cap`` on it, buying ``floor(cap / V_k(day))`` units. The reward of the pick
is the unrealised return of everything held in k,

    R = V_k(day) * sum(units) / sum(V_k(buy_day) * units) - 1,

evaluated before the new purchase. A portfolio that was never bought returns
0. With ``binary_rewards`` (the default) the policy observes ``1{R > 0}``
instead of R, both for its posterior and its change detector.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .base import EpisodeEnd, StepOutcome


class PriceFileError(ValueError):
    pass


@dataclass(frozen=True)
class Regime:
    drift: float        # expected daily return
    volatility: float   # daily log-volatility
    duration: int       # days


@dataclass(frozen=True)
class PortfolioSpec:
    initial_price: float
    regimes: Sequence[Regime] = field(default_factory=tuple)


def synth_prices(portfolios: Sequence[PortfolioSpec], rng: np.random.Generator) -> np.ndarray:
    """Regime-switching geometric random walks, one row per portfolio.

    Each day the price is multiplied by ``(1 + drift) * exp(vol z - vol^2 / 2)``.
    All portfolios must cover the same number of days.
    """
    rows = []
    for spec in portfolios:
        if not spec.initial_price > 0:
            raise ValueError("initial price must be positive")
        factors = []
        for reg in spec.regimes:
            if reg.duration < 1:
                raise ValueError("regime duration must be >= 1")
            if reg.drift <= -1:
                raise ValueError("drift must exceed -1")
            z = rng.standard_normal(reg.duration)
            log_step = math.log1p(reg.drift) + reg.volatility * z - 0.5 * reg.volatility ** 2
            factors.append(log_step)
        steps = np.concatenate(factors) if factors else np.zeros(0)
        path = spec.initial_price * np.exp(np.concatenate(([0.0], np.cumsum(steps))))
        rows.append(path)
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise ValueError("portfolios must span the same number of days")
    return np.vstack(rows)


def load_prices(path) -> tuple[list[str], np.ndarray]:
    """Read a ``date,portfolio_id,value`` CSV into aligned daily series.

    Dates are ISO ``YYYY-MM-DD`` and must increase within each portfolio.
    Missing calendar days are forward-filled; series are cut to the range
    every portfolio covers. Returns ``(portfolio_ids, prices)`` with one row
    per portfolio.
    """
    path = Path(path)
    series: dict[str, list[tuple[dt.date, float]]] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PriceFileError(f"{path}: empty file") from None
        if [h.strip() for h in header] != ["date", "portfolio_id", "value"]:
            raise PriceFileError(f"{path}:1: header must be date,portfolio_id,value")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise PriceFileError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                day = dt.date.fromisoformat(row[0].strip())
                value = float(row[2])
            except ValueError as exc:
                raise PriceFileError(f"{path}:{lineno}: {exc}") from None
            if not (math.isfinite(value) and value > 0):
                raise PriceFileError(f"{path}:{lineno}: price must be positive, got {row[2].strip()}")
            pid = row[1].strip()
            seq = series.setdefault(pid, [])
            if seq and day <= seq[-1][0]:
                raise PriceFileError(f"{path}:{lineno}: dates for {pid!r} are not ascending")
            seq.append((day, value))
    if not series:
        raise PriceFileError(f"{path}: no price rows")

    start = max(seq[0][0] for seq in series.values())
    end = min(seq[-1][0] for seq in series.values())
    if end < start:
        raise PriceFileError(f"{path}: portfolios share no common date range")
    n_days = (end - start).days + 1
    ids = sorted(series)
    out = np.empty((len(ids), n_days))
    for row, pid in enumerate(ids):
        seq = series[pid]
        j = 0
        last = None
        # advance to the last quote on or before `start`
        while j < len(seq) and seq[j][0] <= start:
            last = seq[j][1]
            j += 1
        for d in range(n_days):
            day = start + dt.timedelta(days=d)
            while j < len(seq) and seq[j][0] <= day:
                last = seq[j][1]
                j += 1
            out[row, d] = last
    return ids, out


def unrealised_return(price_now: float, units: Sequence[float], buy_prices: Sequence[float]) -> float:
    held = float(np.sum(units))
    cost = float(np.dot(units, buy_prices))
    if held == 0 or cost == 0:
        return 0.0
    return price_now * held / cost - 1.0


class PortfolioEnv:
    """Bandit over portfolios; arm k means "invest in portfolio k now"."""

    def __init__(self, prices, window_days: int = 30, cap: float = 1000.0,
                 binary_rewards: bool = True):
        prices = np.asarray(prices, dtype=float)
        if prices.ndim != 2:
            raise ValueError("prices must be a (portfolios, days) array")
        if np.any(prices <= 0):
            raise ValueError("prices must be positive")
        if window_days < 1:
            raise ValueError("window_days must be >= 1")
        self.prices = prices
        self.n_arms = prices.shape[0]
        self.window_days = int(window_days)
        self.cap = float(cap)
        self.binary_rewards = bool(binary_rewards)
        self.i = 0
        self.units: list[list[float]] = [[] for _ in range(self.n_arms)]
        self.buy_prices: list[list[float]] = [[] for _ in range(self.n_arms)]
        self.n_steps = (prices.shape[1] - 1) // self.window_days + 1

    def reward_bounds(self) -> tuple[float, float, float]:
        return -1.0, 1.0, 0.1

    @property
    def day(self) -> int:
        return self.window_days * self.i

    def returns_now(self) -> np.ndarray:
        """Unrealised return each portfolio would yield if picked today."""
        d = self.day
        return np.array([unrealised_return(self.prices[k, d], self.units[k], self.buy_prices[k])
                         for k in range(self.n_arms)])

    def step(self, arm: int) -> StepOutcome:
        d = self.day
        if d >= self.prices.shape[1]:
            raise EpisodeEnd(f"price series exhausted at day {d}")
        returns = self.returns_now()
        reward = float(returns[arm])
        price = self.prices[arm, d]
        self.units[arm].append(float(math.floor(self.cap / price)))
        self.buy_prices[arm].append(float(price))
        self.i += 1
        best = int(np.argmax(returns))
        return StepOutcome(
            raw_reward=reward,
            oracle_optimal_arm=best,
            oracle_optimal_mean=float(returns[best]),
            chosen_mean=reward,
            change_occurred_this_step=False,
            success_prob=1.0 if reward > 0 else 0.0,
        )
