import math

import numpy as np
import pytest

from zosample import (
    Noiseless,
    StochasticOracle,
    estimate_support,
    make_gaussian_target,
    make_sparse_quadratic_target,
    required_samples,
    restrict_and_sample,
    restrict_potential,
    run_sampler,
    selection_threshold,
)
from zosample.select import SUBEXP_CONSTANT, SparsityModel, embed
from zosample.tuning import TunedParams


def _oracle(target, seed=0):
    return StochasticOracle(target, Noiseless(), rng=np.random.default_rng(seed))


class TestSelectionThreshold:
    def test_published_value(self):
        assert selection_threshold(a=1.0, M=1.0, nu=0.1, s=4) == pytest.approx(0.4)

    def test_zero_smoothing(self):
        assert selection_threshold(a=1.0, M=1.0, nu=0.0, s=4) == pytest.approx(0.5)

    def test_boundary(self):
        s, a, M = 4, 1.0, 1.0
        nu = a / (2 * M * math.sqrt(s))
        assert selection_threshold(a, M, nu, s) == pytest.approx(a / 4)

    def test_too_large_nu_rejected(self):
        with pytest.raises(ValueError, match="a/\\(2 M sqrt\\(s\\)\\)"):
            selection_threshold(a=1.0, M=1.0, nu=0.3, s=4)


class TestRequiredSamples:
    def test_concentration_constant(self):
        ln2 = math.log(2.0)
        assert SUBEXP_CONSTANT == pytest.approx(math.sqrt(8.0 / (3.0 * ln2 * (1.0 - ln2))))
        assert SUBEXP_CONSTANT == pytest.approx(3.541, abs=1e-3)

    def test_direct_evaluation(self):
        R, s, a, d, err = 1.0, 4, 1.0, 100, 0.05
        q = 8 * R * SUBEXP_CONSTANT * math.sqrt(s) / a
        terms = (q * math.log(4 * d / err) ** 1.5, q, q**4)
        assert required_samples(R, s, a, d, err) == math.ceil(max(terms))

    def test_logarithmic_dimension_dependence(self):
        # small q so the log term dominates; n grows like log(d)^{3/2}
        R, s, a, err = 0.01, 1, 1.0, 0.05
        n_small = required_samples(R, s, a, 100, err)
        n_large = required_samples(R, s, a, 10**6, err)
        expected = (math.log(4e6 / err) / math.log(4e2 / err)) ** 1.5
        assert n_large / n_small == pytest.approx(expected, rel=0.05)

    def test_err_domain(self):
        with pytest.raises(ValueError):
            required_samples(1.0, 1, 1.0, 10, err=1.5)


class TestEstimateSupport:
    def test_single_active_coordinate(self):
        target = make_sparse_quadratic_target(20, [0])
        theta = np.zeros(20)
        theta[0] = 1.0
        rng = np.random.default_rng(1)
        hits = 0
        for trial in range(100):
            got = estimate_support(_oracle(target, seed=trial), theta, n=10_000,
                                   nu=0.01, tau=0.5, rng=rng)
            hits += got.tolist() == [0]
        assert hits >= 99

    def test_constant_function_selects_nothing(self):
        from zosample.targets import Potential

        flat = Potential(dim=8, value=lambda th: np.zeros(np.shape(th)[:-1]), M=1.0)
        got = estimate_support(_oracle(flat), np.zeros(8), n=500, nu=0.1, tau=0.05,
                               rng=np.random.default_rng(2))
        assert got.size == 0

    def test_zero_threshold_selects_everything(self):
        target = make_sparse_quadratic_target(12, [3])
        theta = np.zeros(12)
        theta[3] = 1.0
        got = estimate_support(_oracle(target, seed=3), theta, n=50, nu=0.1, tau=0.0,
                               rng=np.random.default_rng(3))
        assert got.size == 12

    def test_probe_count_validated(self):
        target = make_sparse_quadratic_target(5, [0])
        with pytest.raises(ValueError):
            estimate_support(_oracle(target), np.zeros(5), n=0, nu=0.1, tau=0.1,
                             rng=np.random.default_rng(0))

    def test_consumes_two_calls_per_probe(self):
        target = make_sparse_quadratic_target(5, [0])
        oracle = _oracle(target)
        estimate_support(oracle, np.zeros(5), n=77, nu=0.1, tau=0.1,
                         rng=np.random.default_rng(0))
        assert oracle.calls == 154

    def test_recovery_rate_nondecreasing_in_probes(self):
        # fixture family f = sum_{j in S*} c_j theta_j^2 with on-support
        # signal >= a/2 at the query point
        support = [1, 4]
        target = make_sparse_quadratic_target(10, support, coeffs=[0.8, 1.2])
        theta = np.zeros(10)
        theta[support] = [0.9, 0.8]
        a = min(abs(target.grad(theta)[support]))  # 1.44 and 1.92 -> a = 1.44
        nu = a / (2 * target.M * math.sqrt(2))
        tau = selection_threshold(a, target.M, nu, 2)
        rng = np.random.default_rng(4)
        rates = []
        for n in (100, 1000, 10_000):
            hits = sum(
                estimate_support(_oracle(target, seed=1000 + n + t), theta, n, nu, tau,
                                 rng=rng).tolist() == support
                for t in range(200)
            )
            rates.append(hits / 200)
        assert rates == sorted(rates)
        assert rates[-1] >= 0.95

    def test_false_inclusion_rate_at_theorem_n(self):
        # off-support coordinates are zero-mean; at the theorem probe count the
        # per-coordinate false-inclusion rate stays below err/d (+ 4 SE)
        d, s, err = 20, 1, 0.05
        target = make_sparse_quadratic_target(d, [0])
        theta = np.zeros(d)
        theta[0] = 0.5
        grad = target.grad(theta)
        a = abs(grad[0])
        R = float(np.linalg.norm(grad))
        nu = a / (2 * target.M * math.sqrt(s))
        tau = selection_threshold(a, target.M, nu, s)
        n = required_samples(R, s, a, d, err)
        rng = np.random.default_rng(5)
        trials = 40
        false_inclusions = 0
        for t in range(trials):
            got = estimate_support(_oracle(target, seed=2000 + t), theta, n, nu, tau, rng)
            false_inclusions += np.setdiff1d(got, [0]).size
        rate = false_inclusions / (trials * (d - s))
        se = math.sqrt(max(rate * (1 - rate), 1e-12) / (trials * (d - s)))
        assert rate <= err / d + 4 * se + 1e-12


class TestRestriction:
    def test_embed_roundtrip(self):
        anchor = np.arange(6, dtype=float)
        z = np.array([10.0, 20.0])
        full = embed(z, [1, 4], anchor)
        assert np.array_equal(full, [0.0, 10.0, 2.0, 3.0, 20.0, 5.0])
        # embedding inverts restriction wherever theta agrees with the anchor
        theta = anchor.copy()
        theta[[1, 4]] = [7.0, -3.0]
        assert np.array_equal(embed(theta[[1, 4]], [1, 4], anchor), theta)

    def test_restricted_values_match_full(self):
        target = make_gaussian_target(np.zeros(4), np.diag([1.0, 2.0, 3.0, 4.0]))
        anchor = np.array([0.1, 0.2, 0.3, 0.4])
        sub = restrict_potential(target, [0, 2], anchor)
        z = np.array([1.0, -1.0])
        assert sub.value(z) == pytest.approx(target.value(embed(z, [0, 2], anchor)))
        assert np.allclose(sub.grad(z), target.grad(embed(z, [0, 2], anchor))[[0, 2]])

    def test_conditional_moments_from_precision(self):
        rng = np.random.default_rng(6)
        A = rng.standard_normal((4, 4))
        precision = A @ A.T + 4 * np.eye(4)
        mean = rng.standard_normal(4)
        target = make_gaussian_target(mean, precision)
        anchor = rng.standard_normal(4)
        sub = restrict_potential(target, [1, 3], anchor)
        # conditional precision is the principal submatrix
        assert np.allclose(np.linalg.inv(sub.true_cov), precision[np.ix_([1, 3], [1, 3])])
        # conditional mean recovered by direct minimization of the full quadratic
        from scipy.optimize import minimize

        res = minimize(lambda z: float(sub.value(z)), np.zeros(2))
        assert np.allclose(res.x, sub.true_mean, atol=1e-5)

    def test_full_support_restriction_reproduces_trace(self):
        target = make_gaussian_target(np.zeros(3), np.eye(3))
        params = TunedParams(
            algorithm="zo-lmc", concavity="strongly-logconcave", feedback="two-point",
            epsilon=0.25, h=0.01, b=2, b_raw=2.0, nu=0.1, n_steps=30,
        )
        anchor = np.array([0.5, -0.5, 0.25])
        direct = run_sampler("zo-lmc", target, Noiseless(), params, 1, seed=9,
                             x_init=anchor, thin=1)
        restricted = restrict_and_sample(target, [0, 1, 2], anchor, "zo-lmc", params,
                                         n_chains=1, seed=9, thin=1)
        assert np.array_equal(direct[0].states, restricted[0].states)

    def test_separable_restriction_matches_direct_marginal(self):
        # 50-dim separable Gaussian, true support {0, 1}: the restricted run
        # must recover the same closed-form marginal as a direct 2-dim run
        d = 50
        prec = np.eye(d)
        prec[0, 0], prec[1, 1] = 2.0, 0.5
        target = make_gaussian_target(np.zeros(d), prec)
        sub = restrict_potential(target, [0, 1], np.zeros(d))
        assert np.allclose(sub.true_cov, np.diag([0.5, 2.0]))
        params = TunedParams(
            algorithm="zo-lmc", concavity="strongly-logconcave", feedback="two-point",
            epsilon=0.25, h=0.02, b=4, b_raw=4.0, nu=0.05, n_steps=800,
        )
        chains = restrict_and_sample(target, [0, 1], np.zeros(d), "zo-lmc", params,
                                     n_chains=40, seed=10)
        pooled = np.concatenate([c.states[len(c.states) // 2:] for c in chains])
        assert np.allclose(pooled.mean(axis=0), 0.0, atol=0.12)
        assert np.allclose(pooled.var(axis=0, ddof=1), [0.5, 2.0], rtol=0.25)

    def test_total_call_arithmetic(self):
        target = make_sparse_quadratic_target(10, [2, 5])
        theta = np.zeros(10)
        theta[[2, 5]] = 1.0
        oracle = _oracle(target, seed=11)
        n = 400
        support = estimate_support(oracle, theta, n, nu=0.05, tau=0.4,
                                   rng=np.random.default_rng(11))
        assert support.tolist() == [2, 5]
        params = TunedParams(
            algorithm="zo-lmc", concavity="strongly-logconcave", feedback="two-point",
            epsilon=0.25, h=0.01, b=3, b_raw=3.0, nu=0.1, n_steps=25,
        )
        chains = restrict_and_sample(target, support, theta, "zo-lmc", params,
                                     n_chains=1, seed=12)
        total = oracle.calls + chains[0].oracle_calls
        assert total == 2 * n + 25 * 2 * 3

    def test_empty_support_rejected(self):
        target = make_gaussian_target(np.zeros(3), np.eye(3))
        with pytest.raises(ValueError, match="lower the threshold"):
            restrict_potential(target, [], np.zeros(3))


def test_sparsity_model_validation():
    SparsityModel(s=2, a=0.5, R=1.0)
    with pytest.raises(ValueError):
        SparsityModel(s=0, a=0.5, R=1.0)
    with pytest.raises(ValueError):
        SparsityModel(s=1, a=-1.0, R=1.0)
