from .base import EpisodeEnd, Environment, StepOutcome
from .edge import (
    GIGA,
    MEGA,
    EdgeComputeEnv,
    Server,
    buffer_interval,
    buffer_sample,
    expected_clipped_uniform,
    latency,
    partition_users,
)
from .gaussian import InfeasibleChangeError, PiecewiseGaussianEnv, draw_gap, propose_change
from .portfolio import (
    PortfolioEnv,
    PortfolioSpec,
    PriceFileError,
    Regime,
    load_prices,
    synth_prices,
    unrealised_return,
)

__all__ = [
    "EdgeComputeEnv",
    "EpisodeEnd",
    "Environment",
    "GIGA",
    "InfeasibleChangeError",
    "MEGA",
    "PiecewiseGaussianEnv",
    "PortfolioEnv",
    "PortfolioSpec",
    "PriceFileError",
    "Regime",
    "Server",
    "StepOutcome",
    "buffer_interval",
    "buffer_sample",
    "draw_gap",
    "expected_clipped_uniform",
    "latency",
    "load_prices",
    "partition_users",
    "propose_change",
    "synth_prices",
    "unrealised_return",
]
