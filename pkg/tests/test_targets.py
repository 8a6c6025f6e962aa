import numpy as np
import pytest

from zosample import (
    check_potential,
    make_gaussian_target,
    make_logistic_target,
    make_mixture_target,
    make_sparse_quadratic_target,
    run_lmc_baseline_ensemble,
)
from zosample.targets import Potential, finite_difference_grad, load_logistic_csv


class TestGaussianTarget:
    def test_identity_precision(self):
        t = make_gaussian_target(np.zeros(2), np.eye(2))
        assert t.value(np.array([1.0, 1.0])) == pytest.approx(1.0)
        assert t.m == 1.0 and t.M == 1.0

    def test_condition_number_diagonal(self):
        t = make_gaussian_target(np.zeros(2), np.diag([1.0, 10.0]))
        assert t.kappa == pytest.approx(10.0)

    def test_minimizer(self):
        t = make_gaussian_target(np.array([3.0, 0.0]), np.eye(2))
        x = np.array([3.0, 0.0])
        assert t.value(x) == pytest.approx(0.0)
        assert np.allclose(t.grad(x), 0.0)

    def test_non_spd_rejected(self):
        with pytest.raises(ValueError, match="positive definite"):
            make_gaussian_target(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]))
        with pytest.raises(ValueError, match="symmetric"):
            make_gaussian_target(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_batched_eval(self):
        t = make_gaussian_target(np.zeros(3), np.eye(3))
        pts = np.random.default_rng(0).standard_normal((7, 3))
        assert t.value(pts).shape == (7,)
        assert t.grad(pts).shape == (7, 3)

    def test_invariant_checks(self):
        rng = np.random.default_rng(1)
        check_potential(make_gaussian_target(np.ones(3), np.diag([0.5, 1.0, 2.0])), rng)


class TestMixtureTarget:
    def test_single_component_matches_gaussian(self):
        mix = make_mixture_target([1.0], [np.zeros(2)], [np.eye(2)])
        gauss = make_gaussian_target(np.zeros(2), np.eye(2))
        pts = np.random.default_rng(2).standard_normal((10, 2))
        # equal up to an additive constant, so gradients agree exactly
        assert np.allclose(mix.grad(pts), gauss.grad(pts), atol=1e-12)
        shifted = mix.value(pts) - mix.value(np.zeros(2))
        assert np.allclose(shifted, gauss.value(pts) - gauss.value(np.zeros(2)), atol=1e-12)

    def test_symmetric_two_component(self):
        mu = np.array([1.5, -0.5])
        mix = make_mixture_target([0.5, 0.5], [mu, -mu], [np.eye(2), np.eye(2)])
        pts = np.random.default_rng(3).standard_normal((20, 2))
        assert np.allclose(mix.value(pts), mix.value(-pts), atol=1e-12)

    def test_weight_normalization_rejected(self):
        with pytest.raises(ValueError, match="sum to 1"):
            make_mixture_target([0.5, 0.6], [[0.0], [1.0]], [np.eye(1), np.eye(1)])

    def test_moments_and_constants(self):
        mix = make_mixture_target(
            [0.5, 0.5], [[-1.0], [1.0]], [np.eye(1), np.eye(1)], lsi_constant=0.2
        )
        assert mix.m == 0.0
        assert mix.M == pytest.approx(2.0)  # lambda_max + spread^2/4 = 1 + 1
        assert mix.true_mean == pytest.approx(0.0)
        assert mix.true_cov[0, 0] == pytest.approx(2.0)
        assert mix.lsi_constant == 0.2

    def test_gradient_matches_finite_differences(self):
        mix = make_mixture_target(
            [0.3, 0.7], [[-1.0, 0.0], [1.0, 0.5]], [np.eye(2), 0.5 * np.eye(2)]
        )
        rng = np.random.default_rng(4)
        for _ in range(5):
            theta = rng.standard_normal(2)
            assert np.allclose(
                mix.grad(theta), finite_difference_grad(mix, theta), atol=1e-6
            )

    def test_mean_zero_against_long_baseline(self):
        # independent oracle: long exact-gradient overdamped runs
        mix = make_mixture_target([0.5, 0.5], [[-2.0], [2.0]], [np.eye(1), np.eye(1)])
        cloud = run_lmc_baseline_ensemble(
            mix, h=0.01, n_steps=4000, n_chains=500, seed=5, x_init_std=2.0, keep_last=400
        )
        assert abs(cloud.mean()) < 0.1


class TestLogisticTarget:
    def test_zero_feature_row(self):
        t = make_logistic_target(np.zeros((1, 3)), np.array([1.0]), ridge=2.0)
        theta = np.array([0.5, -1.0, 2.0])
        expected = np.log(2.0) + 1.0 * np.sum(theta**2)
        assert t.value(theta) == pytest.approx(expected)

    def test_gradient_against_finite_differences(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((40, 3))
        y = (rng.uniform(size=40) < 0.5).astype(float)
        t = make_logistic_target(X, y, ridge=1.0)
        for _ in range(10):
            theta = rng.standard_normal(3)
            g = t.grad(theta)
            fd = finite_difference_grad(t, theta)
            assert np.linalg.norm(g - fd) <= 1e-6 * (1 + np.linalg.norm(g))

    def test_constants(self):
        X = np.array([[1.0, 0.0], [0.0, 2.0]])
        t = make_logistic_target(X, np.array([0.0, 1.0]), ridge=0.5)
        assert t.m == 0.5
        assert t.M == pytest.approx(0.5 + 0.25 * 4.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            make_logistic_target(np.zeros((0, 2)), np.zeros(0), ridge=1.0)
        make_logistic_target(np.array([[1.0, 2.0]]), np.array([1.0]), ridge=1.0)

    def test_csv_roundtrip(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("y,x1,x2\n1,0.5,-1.0\n0,2.0,0.25\n")
        t = load_logistic_csv(path, ridge=1.0)
        direct = make_logistic_target(
            np.array([[0.5, -1.0], [2.0, 0.25]]), np.array([1.0, 0.0]), ridge=1.0
        )
        theta = np.array([0.3, -0.7])
        assert t.value(theta) == pytest.approx(direct.value(theta))


class TestSparseQuadratic:
    def test_gradient_support(self):
        t = make_sparse_quadratic_target(10, [2, 7], coeffs=[1.0, 3.0])
        theta = np.arange(10, dtype=float)
        g = t.grad(theta)
        assert g[2] == pytest.approx(4.0) and g[7] == pytest.approx(42.0)
        assert np.count_nonzero(g) == 2
        assert t.M == pytest.approx(6.0)

    def test_bad_support_rejected(self):
        with pytest.raises(ValueError):
            make_sparse_quadratic_target(5, [7])
        with pytest.raises(ValueError):
            make_sparse_quadratic_target(5, [])


def test_potential_validation():
    with pytest.raises(ValueError):
        Potential(dim=2, value=lambda x: 0.0, m=2.0, M=1.0)
    with pytest.raises(ValueError):
        Potential(dim=0, value=lambda x: 0.0)
    with pytest.raises(ValueError):
        Potential(dim=2, value=lambda x: 0.0, M=0.0)
