"""Kolmogorov-Smirnov actively adaptive Thompson sampling for piecewise-stationary bandits."""

__version__ = "0.1.0"

from .detection import (  # noqa: E402
    DetectionOutcome,
    DetectorCalibration,
    RewardCache,
    calibrate,
    check_change,
    compute_estimate_window,
    compute_t_ref,
    compute_test_window,
    compute_warmup,
    max_change_rate,
    mean_shift_check,
)
from .policies import VARIANTS, BetaPosterior, RewardMapper, ThompsonSampler, map_reward  # noqa: E402
from .stats import (  # noqa: E402
    Ecdf,
    GaussianSpec,
    KsTwoSampleResult,
    build_ecdf,
    dkwm_tail,
    erf,
    erf_inverse,
    gaussian_ks_equal_var,
    gaussian_ks_general,
    ks_two_sample,
    q_function,
    q_inverse,
)
