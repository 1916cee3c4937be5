"""Tests for RMSE, distribution distances, and quantile summaries."""

import numpy as np
import pytest

from trimkf.ensemble import Ensemble
from trimkf.metrics import (
    RmseSeries,
    ensemble_mean_rmse,
    ensemble_rmse,
    ks_distance,
    replicate_quantiles,
    time_avg_rmse,
    wasserstein_distance,
)
from trimkf.oracle import DensityGrid


class TestEnsembleRmse:
    def test_exact_members_zero(self):
        e = Ensemble(np.tile(np.array([[1.0], [2.0]]), (1, 5)))
        assert ensemble_rmse(e, np.array([1.0, 2.0])) == 0.0

    def test_single_member_offset(self):
        e = Ensemble(np.array([[4.0]]))
        assert ensemble_rmse(e, np.array([1.0])) == pytest.approx(3.0)

    def test_two_members_at_plus_minus_one(self):
        e = Ensemble(np.array([[1.0, -1.0]]))
        assert ensemble_rmse(e, np.array([0.0])) == pytest.approx(1.0)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        m = rng.standard_normal((4, 30))
        truth = rng.standard_normal(4)
        base = ensemble_rmse(Ensemble(m), truth)
        perm_members = ensemble_rmse(Ensemble(m[:, rng.permutation(30)]), truth)
        dim_perm = rng.permutation(4)
        perm_dims = ensemble_rmse(Ensemble(m[dim_perm]), truth[dim_perm])
        assert base == pytest.approx(perm_members) == pytest.approx(perm_dims)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            ensemble_rmse(Ensemble(np.ones((2, 3))), np.ones(3))

    def test_mean_only_variant(self):
        e = Ensemble(np.array([[1.0, -1.0]]))
        assert ensemble_mean_rmse(e, np.array([0.0])) == 0.0
        assert ensemble_rmse(e, np.array([0.0])) == pytest.approx(1.0)


class TestTimeAvgRmse:
    def test_constant_series(self):
        assert time_avg_rmse(np.full(7, 2.5)) == pytest.approx(2.5)

    def test_hand_values(self):
        assert time_avg_rmse(np.array([0.0, 2.0])) == pytest.approx(np.sqrt(2.0))
        assert time_avg_rmse(np.array([3.0, 4.0])) == pytest.approx(np.sqrt(12.5))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            time_avg_rmse(np.array([]))

    def test_bounded_by_series_range(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            s = np.abs(rng.standard_normal(20))
            agg = time_avg_rmse(s)
            assert s.min() <= agg <= s.max()

    def test_series_container(self):
        s = RmseSeries(times=np.array([1.0, 2.0]), values=np.array([3.0, 4.0]))
        assert s.aggregate == pytest.approx(np.sqrt(12.5), abs=1e-12)


class TestKsDistance:
    def test_identical_samples_zero(self):
        x = np.random.default_rng(2).standard_normal(100)
        assert ks_distance(x, x.copy()) == 0.0

    def test_point_masses(self):
        assert ks_distance(np.array([0.0]), np.array([1.0])) == pytest.approx(1.0)

    def test_uniform_sample_vs_exact_grid(self):
        rng = np.random.default_rng(3)
        sample = rng.uniform(size=100_000)
        grid = DensityGrid(np.linspace(0, 1, 2001), np.ones(2001)).normalized()
        assert ks_distance(sample, grid) < 0.01

    def test_symmetry_and_range(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal(500)
        b = rng.standard_normal(800) + 0.5
        d1, d2 = ks_distance(a, b), ks_distance(b, a)
        assert d1 == pytest.approx(d2)
        assert 0.0 <= d1 <= 1.0

    def test_weighted_sample_support(self):
        # weighted sample emulating a fair coin on {0, 1} vs a biased one
        a = (np.array([0.0, 1.0]), np.array([0.5, 0.5]))
        b = (np.array([0.0, 1.0]), np.array([0.9, 0.1]))
        assert ks_distance(a, b) == pytest.approx(0.4)

    def test_matches_scipy_two_sample(self):
        from scipy.stats import ks_2samp

        rng = np.random.default_rng(5)
        a = rng.standard_normal(400)
        b = rng.standard_normal(300) * 1.3
        assert ks_distance(a, b) == pytest.approx(ks_2samp(a, b).statistic, abs=1e-12)


class TestWasserstein:
    def test_point_mass_shift(self):
        assert wasserstein_distance(np.array([0.0]), np.array([2.0])) == pytest.approx(2.0)

    def test_grid_vs_sample(self):
        rng = np.random.default_rng(6)
        sample = rng.standard_normal(50_000)
        x = np.linspace(-8, 8, 2001)
        grid = DensityGrid(x, np.exp(-0.5 * x**2)).normalized()
        assert wasserstein_distance(sample, grid) < 0.02


class TestReplicateQuantiles:
    def test_single_value(self):
        q = replicate_quantiles(np.array([3.0]))
        assert np.allclose(q, 3.0)

    def test_median_of_one_to_five(self):
        q = replicate_quantiles(np.arange(1.0, 6.0), qs=(0.5,))
        assert q[0] == pytest.approx(3.0)

    def test_linear_interpolation_convention(self):
        q = replicate_quantiles(np.array([1.0, 2.0, 3.0, 4.0]), qs=(0.25,))
        assert q[0] == pytest.approx(1.75)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            replicate_quantiles(np.array([]))
