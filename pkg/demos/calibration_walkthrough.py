"""Walk from error targets to window sizes and the regret bound.

Run with ``python demos/calibration_walkthrough.py``.
"""
import numpy as np

from tsks import calibrate, gaussian_ks_equal_var, GaussianSpec, dkwm_tail
from tsks.detection import detectable_distance, power_window
from tsks.harness import regret_bound, total_confidence

# Error targets and the range of mean shifts the detector must catch.
P_F, P_M = 0.05, 0.1
DELTA_MIN, DELTA_MAX, SIGMA = 0.5, 1.5, 1.0

cal = calibrate(P_F, P_M, DELTA_MIN, DELTA_MAX, SIGMA, p_loc=0.05, delta_mu=0.5,
                p_change=0.1, estimate_accuracy=0.1)
print("test window n_T      ", cal.test_window)
print("threshold t_ref      ", round(cal.t_ref, 5))
print("estimate window N    ", cal.estimate_window)
print("warm-up T_N          ", cal.warmup_plays)
print("max change rate      ", f"{cal.max_change_rate:.4e}")
print("total confidence     ", round(total_confidence(0.05, 0.1, P_M), 4))

# The sup-distance between two unit-variance Gaussians one shift apart.
d, z = gaussian_ks_equal_var(GaussianSpec(0.0, SIGMA), GaussianSpec(DELTA_MIN, SIGMA))
print(f"\nKS distance for a shift of {DELTA_MIN}: {d:.4f} (attained at z={z:.3f})")

# The smallest distance guaranteed with probability 1 - P_M over uniform shifts.
D = detectable_distance(P_M, DELTA_MIN, DELTA_MAX, SIGMA)
print(f"guaranteed distance {D:.4f}; window for a power test {power_window(D, P_F, P_M)}")

# DKWM: how likely is an ECDF of N samples off by more than 0.1?
for n in (50, 185, 500):
    print(f"P(sup error > 0.1 | N={n:3d}) <= {dkwm_tail(n, 0.1):.4f}")

# Regret bound per step, up to its constant, over a range of horizons.
print("\nhorizon   bound/T")
for T in np.linspace(2000, 10000, 5):
    b = regret_bound(T, cal.warmup_plays, cal.test_window, cal.max_change_rate)
    print(f"{T:7.0f}   {b / T:.4e}")
