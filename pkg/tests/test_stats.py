import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from tsks.stats import (
    GaussianSpec,
    build_ecdf,
    dkwm_tail,
    erf,
    erf_inverse,
    gaussian_ks_equal_var,
    gaussian_ks_general,
    ks_one_sample,
    ks_two_sample,
    q_function,
    q_inverse,
)


def brute_ks(a, b):
    """Supremum of |F_a - F_b| over sample points, midpoints and both ends."""
    pts = np.unique(np.concatenate([a, b]))
    grid = np.concatenate([pts, (pts[:-1] + pts[1:]) / 2, [pts[0] - 1.0, pts[-1] + 1.0]])
    best = 0.0
    for z in grid:
        fa = sum(1 for v in a if v <= z) / len(a)
        fb = sum(1 for v in b if v <= z) / len(b)
        best = max(best, abs(fa - fb))
    return best


def grid_sup(mu0, s0, mu1, s1, step=1e-4):
    lo = min(mu0 - 12 * s0, mu1 - 12 * s1)
    hi = max(mu0 + 12 * s0, mu1 + 12 * s1)
    x = np.arange(lo, hi, step)
    return float(np.max(np.abs(norm.cdf(x, mu0, s0) - norm.cdf(x, mu1, s1))))


samples = st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=40)


class TestEcdf:
    def test_small_examples(self):
        f = build_ecdf([1, 2, 3])
        assert f(1) == pytest.approx(1 / 3)
        assert f(2.5) == pytest.approx(2 / 3)
        g = build_ecdf([5])
        assert g(4.9) == 0 and g(5) == 1

    def test_permutation_invariance(self):
        assert np.array_equal(build_ecdf([3, 1, 2]).samples, build_ecdf([1, 2, 3]).samples)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty sample"):
            build_ecdf([])

    @given(samples)
    def test_shape(self, values):
        f = build_ecdf(values)
        assert np.all(np.diff(f.samples) >= 0)
        assert f(-np.inf) == 0 and f(np.inf) == 1
        xs = np.linspace(-120, 120, 97)
        assert np.all(np.diff(f(xs)) >= 0)
        # value at the i-th sorted sample is i/n when the sample is distinct
        for i, v in enumerate(f.samples, start=1):
            if np.sum(f.samples == v) == 1:
                assert f(v) == pytest.approx(i / f.size)
            assert f.eval_left(v) <= f(v)


class TestKsTwoSample:
    def test_examples(self):
        e = build_ecdf
        assert ks_two_sample(e([1, 2, 3]), e([1, 2, 3])).distance == 0
        assert ks_two_sample(e([1, 2, 3]), e([10, 11, 12])).distance == 1
        assert ks_two_sample(e([1, 2, 3]), e([1.5, 2.5, 3.5])).distance == pytest.approx(1 / 3)

    def test_matches_brute_force_third(self):
        a, b = [1, 2, 3], [1.5, 2.5, 3.5]
        assert brute_ks(a, b) == pytest.approx(1 / 3, abs=1e-12)

    @given(samples, samples)
    @settings(max_examples=200)
    def test_oracle_symmetry_and_scaling(self, a, b):
        r = ks_two_sample(build_ecdf(a), build_ecdf(b))
        assert abs(r.distance - brute_ks(a, b)) <= 1e-12
        assert r.distance == ks_two_sample(build_ecdf(b), build_ecdf(a)).distance
        assert 0 <= r.distance <= 1
        n, m = len(a), len(b)
        assert r.n == n and r.m == m
        assert r.scaled_statistic == pytest.approx(math.sqrt(n * m / (n + m)) * r.distance)

    def test_ties_across_samples(self):
        # both-sided limits matter when samples coincide
        a, b = [0, 0, 1], [0, 1, 1]
        assert ks_two_sample(build_ecdf(a), build_ecdf(b)).distance == pytest.approx(1 / 3)

    def test_one_sample_against_cdf(self):
        f = build_ecdf([0.5])
        assert ks_one_sample(f, lambda x: np.clip(x, 0, 1)) == pytest.approx(0.5)


class TestDkwm:
    def test_value(self):
        assert dkwm_tail(100, 0.1) == pytest.approx(0.2706705664732254, rel=1e-12)

    def test_cap_and_domain(self):
        assert dkwm_tail(1, 1e-9) == 1.0
        with pytest.raises(ValueError):
            dkwm_tail(10, 0.0)

    @given(st.integers(1, 10_000), st.floats(0.01, 2.0), st.integers(1, 100), st.floats(0.001, 1.0))
    def test_monotone(self, n, t, dn, dt):
        assert dkwm_tail(n + dn, t) <= dkwm_tail(n, t)
        assert dkwm_tail(n, t + dt) <= dkwm_tail(n, t)
        assert 0 <= dkwm_tail(n, t) <= 1  # exp underflows to 0 for huge n t^2


class TestGaussianDistances:
    def test_equal_var_examples(self):
        d, x = gaussian_ks_equal_var(GaussianSpec(0, 1), GaussianSpec(0, 1))
        assert d == 0 and x == 0
        d, x = gaussian_ks_equal_var(GaussianSpec(0, 1), GaussianSpec(1, 1))
        # grid search over [-10, 10] at step 1e-4 gives 0.38292492254802624 at x = 0.5
        assert d == pytest.approx(0.38292492254802624, abs=1e-9)
        assert x == 0.5
        assert gaussian_ks_equal_var(GaussianSpec(0, 1e9), GaussianSpec(1, 1e9))[0] < 1e-9

    def test_equal_var_rejects_unequal(self):
        with pytest.raises(ValueError, match="gaussian_ks_general"):
            gaussian_ks_equal_var(GaussianSpec(0, 1), GaussianSpec(0, 2))

    def test_general_variance_only(self):
        d = gaussian_ks_general(GaussianSpec(0, 1), GaussianSpec(0, 2))
        # grid maximum of |Phi(x) - Phi(x/2)| is 0.16133728426 near x = 1.3596
        assert d == pytest.approx(0.16133728426102534, abs=1e-9)
        assert gaussian_ks_general(GaussianSpec(0, 2), GaussianSpec(0, 1)) == d

    def test_general_near_equal_variances(self):
        d = gaussian_ks_general(GaussianSpec(0, 1), GaussianSpec(0, 1 + 1e-3))
        assert 0 < d < 1e-3
        assert d == pytest.approx(grid_sup(0, 1, 0, 1 + 1e-3, step=1e-3), abs=1e-6)
        tiny = gaussian_ks_general(GaussianSpec(0.3, 1), GaussianSpec(0.5, 1 + 1e-9))
        assert tiny == pytest.approx(gaussian_ks_equal_var(GaussianSpec(0.3, 1),
                                                           GaussianSpec(0.5, 1))[0], abs=1e-6)

    def test_general_equal_var_delegates(self):
        a, b = GaussianSpec(0, 1), GaussianSpec(1, 1)
        assert gaussian_ks_general(a, b) == gaussian_ks_equal_var(a, b)[0]

    def test_spec_rejects_nonpositive_std(self):
        with pytest.raises(ValueError):
            GaussianSpec(0, 0)

    def test_both_crossings_matter(self):
        # unequal variance and a mean shift: the supremum may sit at either root
        rng = np.random.default_rng(3)
        for _ in range(10):
            mu0, mu1 = rng.uniform(-2, 2, 2)
            s0, s1 = rng.uniform(0.3, 3, 2)
            d = gaussian_ks_general(GaussianSpec(mu0, s0), GaussianSpec(mu1, s1))
            assert d == pytest.approx(grid_sup(mu0, s0, mu1, s1, step=1e-3), abs=1e-4)


class TestErfSuite:
    def test_anchors(self):
        assert erf(0.0) == 0.0
        assert q_function(0.0) == 0.5
        assert q_inverse(0.05) == pytest.approx(1.6448536269514729, abs=1e-9)
        assert erf_inverse(erf(0.7)) == pytest.approx(0.7, abs=1e-10)

    @given(st.floats(-0.999, 0.999))
    def test_erf_round_trip(self, p):
        assert abs(erf(erf_inverse(p)) - p) <= 1e-10

    @given(st.floats(1e-6, 1 - 1e-6))
    def test_q_round_trip(self, p):
        assert q_function(q_inverse(p)) == pytest.approx(p, rel=1e-9, abs=1e-12)

    @given(st.floats(-6, 6))
    def test_q_matches_erf(self, x):
        assert q_function(x) == pytest.approx((1 - erf(x / math.sqrt(2))) / 2, abs=1e-15)

    @pytest.mark.parametrize("bad", [-1.0, 1.0, 1.5])
    def test_erf_inverse_domain(self, bad):
        with pytest.raises(ValueError):
            erf_inverse(bad)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.1])
    def test_q_inverse_domain(self, bad):
        with pytest.raises(ValueError):
            q_inverse(bad)
