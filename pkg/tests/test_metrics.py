import numpy as np
import pytest

from zosample import brownian_cov_oracle, sliced_w2, w2_1d_exact, w2_gaussian_bures
from zosample.metrics import fit_moments


class TestW2OneDim:
    def test_identical_clouds(self):
        x = np.random.default_rng(0).standard_normal(100)
        assert w2_1d_exact(x, x.copy()) == 0.0

    def test_point_masses(self):
        assert w2_1d_exact([0.0], [1.0]) == pytest.approx(1.0)

    def test_shifted_gaussians(self):
        rng = np.random.default_rng(1)
        p = rng.standard_normal(100_000)
        q = rng.standard_normal(100_000) + 2.0
        assert w2_1d_exact(p, q) == pytest.approx(2.0, abs=0.05)

    def test_unequal_sizes_quantile_coupling(self):
        rng = np.random.default_rng(2)
        p = rng.standard_normal(50_000)
        q = rng.standard_normal(200_000) + 1.0
        assert w2_1d_exact(p, q) == pytest.approx(1.0, abs=0.05)

    def test_metric_properties(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            a, b, c = (rng.standard_normal(64) + rng.uniform(-2, 2) for _ in range(3))
            dab, dba = w2_1d_exact(a, b), w2_1d_exact(b, a)
            assert dab == dba
            assert dab <= w2_1d_exact(a, c) + w2_1d_exact(c, b) + 1e-12

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            w2_1d_exact([], [1.0])


class TestBures:
    def test_sampling_floor(self):
        rng = np.random.default_rng(4)
        cov = np.diag([1.0, 2.0])
        pts = rng.multivariate_normal(np.zeros(2), cov, size=100_000)
        assert w2_gaussian_bures(pts, np.zeros(2), cov) <= 0.05 * np.sqrt(np.trace(cov))

    def test_identity_covariances_reduce_to_mean_gap(self):
        rng = np.random.default_rng(5)
        pts = rng.multivariate_normal([3.0, -1.0], np.eye(2), size=200_000)
        mu_hat, _ = fit_moments(pts)
        expected = np.linalg.norm(mu_hat - np.zeros(2))
        got = w2_gaussian_bures(pts, np.zeros(2), np.eye(2))
        # fitted covariance is I up to sampling noise, so W2 ~ mean gap
        assert got == pytest.approx(expected, rel=0.01)

    def test_point_mass(self):
        pts = np.tile([1.0, 2.0], (50, 1))
        cov = np.diag([2.0, 3.0])
        assert w2_gaussian_bures(pts, np.array([1.0, 2.0]), cov) == pytest.approx(
            np.sqrt(np.trace(cov)), rel=1e-4
        )

    def test_zero_iff_moments_match(self):
        rng = np.random.default_rng(6)
        pts = rng.standard_normal((500, 3))
        mu, cov = fit_moments(pts)
        assert w2_gaussian_bures(pts, mu, cov) <= 1e-9

    def test_needs_enough_points(self):
        with pytest.raises(ValueError):
            w2_gaussian_bures(np.zeros((2, 2)), np.zeros(2), np.eye(2))


class TestSlicedW2:
    def test_identical(self):
        pts = np.random.default_rng(7).standard_normal((500, 3))
        assert sliced_w2(pts, pts.copy(), 32, np.random.default_rng(8)) == 0.0

    def test_rotation_invariance(self):
        rng = np.random.default_rng(9)
        p = rng.standard_normal((4000, 2)) * np.array([1.0, 0.3])
        q = rng.standard_normal((4000, 2))
        theta = 0.7
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        vals_plain = [sliced_w2(p, q, 64, np.random.default_rng(s)) for s in range(12)]
        vals_rot = [sliced_w2(p @ rot.T, q @ rot.T, 64, np.random.default_rng(s + 50))
                    for s in range(12)]
        se = np.hypot(np.std(vals_plain, ddof=1), np.std(vals_rot, ddof=1)) / np.sqrt(12)
        assert abs(np.mean(vals_plain) - np.mean(vals_rot)) <= 3 * se

    def test_mean_shift_scale(self):
        rng = np.random.default_rng(10)
        delta = np.array([1.2, -0.9])
        p = rng.standard_normal((100_000, 2))
        q = rng.standard_normal((100_000, 2)) + delta
        val = sliced_w2(p, q, 256, np.random.default_rng(11))
        assert val == pytest.approx(np.linalg.norm(delta) / np.sqrt(2), rel=0.1)

    def test_min_projections(self):
        pts = np.zeros((10, 2))
        with pytest.raises(ValueError):
            sliced_w2(pts, pts, 8, np.random.default_rng(0))


class TestBrownianOracle:
    def test_constant_kernel_unit_variance(self):
        cov = brownian_cov_oracle(
            [lambda s: np.ones_like(s)], 1.0, 200, 50_000, np.random.default_rng(12)
        )
        assert cov[0, 0] == pytest.approx(1.0, rel=0.02)

    def test_identical_kernels_fully_correlated(self):
        cov = brownian_cov_oracle(
            [lambda s: np.ones_like(s), lambda s: np.ones_like(s)],
            1.0, 200, 20_000, np.random.default_rng(13),
        )
        corr = cov[0, 1] / np.sqrt(cov[0, 0] * cov[1, 1])
        assert corr == pytest.approx(1.0, abs=1e-12)

    def test_exponential_kernel_ito_isometry(self):
        T = 0.1
        cov = brownian_cov_oracle(
            [lambda s: np.exp(-2 * (T - s))], T, 1000, 200_000, np.random.default_rng(14)
        )
        assert cov[0, 0] == pytest.approx((1 - np.exp(-0.4)) / 4, rel=0.02)

    def test_substep_refinement_stable(self):
        # kinetic-integrator kernels at h = 0.2: doubling substeps moves
        # entries by at most 1% (MC noise controlled by matched path counts)
        g, h = 2.0, 0.2
        kernels = [
            lambda s: np.sqrt(2 * g) * np.exp(-g * (h - s)),
            lambda s: np.sqrt(2 * g) * (1 - np.exp(-g * (h - s))) / g,
        ]
        a = brownian_cov_oracle(kernels, h, 500, 400_000, np.random.default_rng(15))
        b = brownian_cov_oracle(kernels, h, 1000, 400_000, np.random.default_rng(15))
        assert np.max(np.abs(a - b) / np.abs(a)) <= 0.01

    def test_preconditions(self):
        with pytest.raises(ValueError):
            brownian_cov_oracle([lambda s: s], 1.0, 10, 50_000, np.random.default_rng(0))
        with pytest.raises(ValueError):
            brownian_cov_oracle([lambda s: s], 1.0, 200, 100, np.random.default_rng(0))
