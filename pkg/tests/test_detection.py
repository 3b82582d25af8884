import math
from dataclasses import asdict

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsks.detection import (
    DetectorCalibration,
    InsufficientSamplesError,
    RewardCache,
    calibrate,
    check_change,
    compute_estimate_window,
    compute_t_ref,
    compute_test_window,
    compute_warmup,
    max_change_rate,
    mean_shift_check,
    power_window,
    warmup_bound,
    window_for_distance,
)
from tsks.stats import GaussianSpec, dkwm_tail, gaussian_ks_general

probs = st.floats(1e-4, 0.5)


def lemma4_bound(pf, pm, dmin, dmax, sigma):
    arg = (pm * (dmax - dmin) + dmin) / (2 * math.sqrt(2) * sigma)
    return math.log(2 / pf) / (2 * math.erf(arg) ** 2)


class TestCalibrationFormulas:
    def test_t_ref_values(self):
        assert compute_t_ref(34, 0.05) == pytest.approx(math.sqrt(math.log(40) / 68), rel=1e-15)
        assert compute_t_ref(34, 0.05) == pytest.approx(0.23292, rel=1e-4)
        assert compute_t_ref(100, 0.05) == pytest.approx(0.13582, rel=1e-4)
        assert compute_t_ref(10**12, 0.05) < 1e-5

    def test_estimate_window_values(self):
        assert compute_estimate_window(0.1, 0.05) == 185
        assert compute_estimate_window(0.5, 0.05) == 8

    def test_estimate_window_at_exact_boundary(self):
        # with t_ref from n and p_loc equal to p_false_alarm the bound is exactly n
        for n in (1, 7, 34, 1000):
            assert compute_estimate_window(compute_t_ref(n, 0.05), 0.05) == n

    def test_warmup_values(self):
        assert warmup_bound(0.5, 185) == pytest.approx(640 * math.log(320) + 2 * (768 + 18 + 185))
        assert compute_warmup(0.5, 185) == 5634
        assert compute_warmup(0.5, 185, rule="double") == 370
        big = compute_warmup(10.0, 10)
        assert big == max(20, math.ceil(1.6 * math.log(0.8) + 2 * (48e-4 + 18 + 10)))

    def test_warmup_errors(self):
        with pytest.raises(ValueError):
            compute_warmup(0.0, 10)
        with pytest.raises(ValueError, match="infeasible"):
            compute_warmup(1e-90, 10)
        with pytest.raises(ValueError):
            compute_warmup(0.5, 10, rule="triple")

    @given(st.floats(0.05, 5.0), st.integers(1, 10_000))
    def test_warmup_monotone_and_floor(self, dmu, n):
        assert compute_warmup(dmu, n + 1) >= compute_warmup(dmu, n) >= 2 * n

    def test_test_window_value(self):
        assert compute_test_window(0.05, 0.1, 0.5, 1.5, 1.0) == 34
        assert lemma4_bound(0.05, 0.1, 0.5, 1.5, 1.0) == pytest.approx(33.16, abs=0.01)

    def test_test_window_grows_with_sigma(self):
        assert compute_test_window(0.05, 0.1, 0.5, 1.5, 2.0) > compute_test_window(0.05, 0.1, 0.5, 1.5, 1.0)

    def test_test_window_missed_one_is_easiest(self):
        assert compute_test_window(0.05, 1.0, 0.5, 1.5, 1.0) == window_for_distance(
            math.erf(1.5 / (2 * math.sqrt(2))), 0.05)

    def test_undetectable(self):
        with pytest.raises(ValueError, match="undetectable configuration"):
            compute_test_window(0.05, 0.0, 0.0, 1.0, 1.0)
        with pytest.raises(ValueError, match="undetectable configuration"):
            compute_test_window(0.05, 0.3, 0.0, 0.0, 1.0)

    @given(probs, st.floats(0.0, 1.0), st.floats(0.05, 2.0), st.floats(0.0, 2.0), st.floats(0.1, 3.0))
    def test_test_window_tight_ceiling(self, pf, pm, dmin, extra, sigma):
        bound = lemma4_bound(pf, pm, dmin, dmin + extra, sigma)
        n = compute_test_window(pf, pm, dmin, dmin + extra, sigma)
        assert n >= bound * (1 - 1e-12)
        assert n - 1 < bound or n == 1

    @given(st.integers(1, 100_000), probs)
    def test_t_ref_dkwm_round_trip(self, n, pf):
        assert dkwm_tail(n, compute_t_ref(n, pf)) == pytest.approx(pf, abs=1e-12)

    @given(st.integers(1, 100_000), st.integers(1, 100_000), probs)
    def test_t_ref_decreasing(self, n, dn, pf):
        assert compute_t_ref(n + dn, pf) < compute_t_ref(n, pf)

    @given(st.floats(0.01, 1.0), probs)
    def test_estimate_window_quadruples(self, t, p):
        raw = lambda x: math.log(2 / p) / (2 * x * x)  # noqa: E731
        assert raw(t / 2) == pytest.approx(4 * raw(t))
        n = compute_estimate_window(t, p)
        assert n >= raw(t) * (1 - 1e-12) and (n - 1 < raw(t) or n == 1)

    def test_max_change_rate(self):
        assert max_change_rate(34, 5634, 0.1) == pytest.approx(math.log(1 / 0.9) / 5668, rel=1e-15)
        assert max_change_rate(34, 5634, 0.1) == pytest.approx(1.859e-5, rel=1e-3)
        assert max_change_rate(68, 11268, 0.1) == pytest.approx(max_change_rate(34, 5634, 0.1) / 2)
        assert max_change_rate(34, 5634, 1e-12) < 1e-15
        with pytest.raises(ValueError):
            max_change_rate(0, 10, 0.1)
        with pytest.raises(ValueError):
            max_change_rate(10, 10, 1.0)

    def test_power_window(self):
        d = gaussian_ks_general(GaussianSpec(0, 1), GaussianSpec(0, 2))
        n = power_window(d, 0.05, 0.1)
        root = math.sqrt(math.log(40) / 2) + math.sqrt(math.log(20) / 2)
        assert n == math.ceil((root / d) ** 2)
        assert n > window_for_distance(d, 0.05)
        with pytest.raises(ValueError, match="undetectable"):
            power_window(0.0, 0.05, 0.1)


class TestDetectorCalibration:
    def test_worked_example(self):
        cal = calibrate(0.05, 0.1, 0.5, 1.5, 1.0, 0.05, 0.5, 0.1, estimate_accuracy=0.1)
        assert (cal.test_window, cal.estimate_window, cal.warmup_plays) == (34, 185, 5634)
        assert cal.t_ref == pytest.approx(0.23292, rel=1e-4)
        assert cal.max_change_rate == pytest.approx(1.859e-5, rel=1e-3)

    def test_implied_accuracy(self):
        cal = calibrate(0.05, 0.1, 0.5, 1.5, 1.0, 0.05, 0.5, 0.1)
        assert cal.estimate_window == 34

    def test_record_round_trip(self):
        cal = calibrate(0.05, 0.1, 0.5, 1.5, 1.0, 0.05, 0.5, 0.1, estimate_accuracy=0.1)
        rec = cal.to_record()
        assert all(isinstance(v, str) for v in rec.values())
        assert DetectorCalibration.from_record(rec) == cal

    def test_invariants(self):
        cal = calibrate(0.05, 0.1, 0.5, 1.5, 1.0, 0.05, 0.5, 0.1)
        fields = asdict(cal)
        with pytest.raises(ValueError, match="inconsistent"):
            DetectorCalibration(**{**fields, "t_ref": fields["t_ref"] + 1e-9})
        with pytest.raises(ValueError):
            DetectorCalibration(**{**fields, "p_missed": 1.0})
        with pytest.raises(ValueError):
            DetectorCalibration(**{**fields, "delta_max": 0.1})
        with pytest.raises(ValueError):
            DetectorCalibration(**{**fields, "sigma": 0.0})


class TestRewardCache:
    def test_windows_layout(self):
        c = RewardCache(2)
        c.extend(0, range(10))
        test, est = c.windows(0, 3, 4)
        assert test.tolist() == [7, 8, 9]
        assert est.tolist() == [3, 4, 5, 6]
        assert c.length(1) == 0

    def test_insufficient(self):
        c = RewardCache(1)
        c.extend(0, [1.0, 2.0])
        with pytest.raises(InsufficientSamplesError, match="warmup incomplete"):
            c.windows(0, 2, 1)

    def test_clear(self):
        c = RewardCache(2)
        c.append(0, 1.0)
        c.append(1, 2.0)
        c.clear()
        assert c.length(0) == c.length(1) == 0

    @given(st.lists(st.tuples(st.integers(0, 2), st.floats(-10, 10)), max_size=50))
    def test_order_preserved(self, plays):
        c = RewardCache(3)
        for arm, r in plays:
            c.append(arm, r)
        for arm in range(3):
            assert c.rewards(arm) == [r for a, r in plays if a == arm]


def _cal(**kw):
    base = dict(p_false_alarm=0.05, p_missed=0.1, delta_min=0.5, delta_max=1.5, sigma=1.0,
                p_loc=0.05, delta_mu=0.5, p_change=0.1)
    base.update(kw)
    return calibrate(**base)


class TestDetectors:
    def test_outcome_consistency(self):
        cal = _cal()
        rng = np.random.default_rng(0)
        for _ in range(50):
            c = RewardCache(1)
            c.extend(0, rng.normal(0, 1, cal.estimate_window + cal.test_window))
            for det in (check_change, mean_shift_check):
                out = det(c, 0, cal)
                assert out.changed == (out.distance > out.threshold_used)
                assert out.arm_checked == 0
        assert mean_shift_check(c, 0, cal).threshold_used == 0.25
        assert check_change(c, 0, cal).threshold_used == cal.t_ref

    def test_detectors_need_full_windows(self):
        cal = _cal()
        c = RewardCache(1)
        c.extend(0, np.zeros(cal.test_window))
        for det in (check_change, mean_shift_check):
            with pytest.raises(InsufficientSamplesError):
                det(c, 0, cal)

    def test_obvious_change(self):
        cal = _cal(estimate_accuracy=0.1)
        c = RewardCache(1)
        c.extend(0, np.zeros(cal.estimate_window))
        c.extend(0, np.ones(cal.test_window))
        assert check_change(c, 0, cal).changed
        assert mean_shift_check(c, 0, cal).changed

    def test_null_rarely_fires(self):
        cal = _cal(estimate_accuracy=0.05)
        rng = np.random.default_rng(7)
        hits = {"ks": 0, "mean": 0}
        for _ in range(300):
            c = RewardCache(1)
            c.extend(0, rng.normal(0, 1, cal.estimate_window + cal.test_window))
            hits["ks"] += check_change(c, 0, cal).changed
            hits["mean"] += mean_shift_check(c, 0, cal).changed
        se = math.sqrt(0.05 * 0.95 / 300)
        assert hits["ks"] / 300 <= 0.05 + 3 * se
        assert hits["mean"] / 300 <= 0.2

    def test_unit_shift_detected_by_mean(self):
        cal = _cal(delta_min=1.0, delta_max=1.5, estimate_accuracy=0.05)
        rng = np.random.default_rng(8)
        hits = 0
        for _ in range(200):
            c = RewardCache(1)
            c.extend(0, rng.normal(0, 1, cal.estimate_window))
            c.extend(0, rng.normal(1, 1, cal.test_window))
            hits += mean_shift_check(c, 0, cal).changed
        assert hits / 200 >= 0.9

    def test_mean_detector_blind_to_variance(self):
        cal = _cal(estimate_accuracy=0.05)
        rng = np.random.default_rng(9)
        hits = 0
        for _ in range(300):
            c = RewardCache(1)
            c.extend(0, rng.normal(0, 1, cal.estimate_window))
            c.extend(0, rng.normal(0, 2, cal.test_window))
            hits += mean_shift_check(c, 0, cal).changed
        # |mean gap| > 0.25 with sd sqrt(4/34 + 1/738) ~ 0.35: about half the runs
        assert hits / 300 < 0.6
