"""Gaussian-smoothing gradient estimation from noisy function evaluations.

The estimator probes the oracle along i.i.d. standard-normal directions u_i
and averages finite-difference directional products:

    g(theta) = (1/b) sum_i [F(theta + nu u_i, xi_i) - F(theta, xi_i')] / nu * u_i

with xi_i' = xi_i under two-point feedback. Monte-Carlo diagnostics compare
the empirical bias and variance against the analytic bounds implemented
below.
"""

from dataclasses import dataclass

import numpy as np

from .oracle import ONE_POINT, StochasticOracle
from .targets import Potential, finite_difference_grad


@dataclass(frozen=True)
class SmoothingConfig:
    """Smoothing radius nu and probe batch size b of the gradient estimator."""

    nu: float
    b: int = 1

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("smoothing radius nu must be positive")
        if self.b < 1:
            raise ValueError("batch size b must be >= 1")


@dataclass(frozen=True)
class GradientEstimate:
    g: np.ndarray
    oracle_calls_used: int


def estimate_gradient(
    oracle: StochasticOracle, theta, cfg: SmoothingConfig, rng
) -> GradientEstimate:
    """One batched gradient estimate at theta; consumes exactly 2b oracle calls.

    Directions are drawn from ``rng``; the oracle draws the evaluation noise
    from its own stream, so identical (rng, oracle) states reproduce the
    estimate bit for bit.
    """
    theta = np.asarray(theta, dtype=float)
    u = rng.standard_normal((cfg.b, theta.shape[0]))
    f_shift, f_base = oracle.query_pair_batch(theta + cfg.nu * u, np.broadcast_to(theta, u.shape))
    g = ((f_shift - f_base) / cfg.nu) @ u / cfg.b
    return GradientEstimate(g=g, oracle_calls_used=2 * cfg.b)


def _estimate_batch(oracle, theta, cfg, rng, reps):
    """reps independent estimates stacked as (reps, d); 2*b*reps oracle calls."""
    theta = np.asarray(theta, dtype=float)
    d = theta.shape[0]
    u = rng.standard_normal((reps * cfg.b, d))
    f_shift, f_base = oracle.query_pair_batch(
        theta + cfg.nu * u, np.broadcast_to(theta, u.shape)
    )
    diffs = (f_shift - f_base) / cfg.nu
    return (diffs[:, None] * u).reshape(reps, cfg.b, d).mean(axis=1)


def smoothing_bias_bound(M: float, nu: float, d: int) -> float:
    """Bound M nu sqrt(d) on || E g - grad f ||."""
    return M * nu * np.sqrt(d)


def two_point_variance_bound(d, grad_norm, sigma, b, nu, M, centered=False):
    """Bound on E||g - grad f||^2 (or on E||g - grad f_nu||^2 if centered)
    under two-point feedback with gradient-level noise sigma."""
    if centered:
        return 2 * (d + 5) * (grad_norm**2 + sigma**2) / b + nu**2 * M**2 * (d + 3) ** 3 / (
            2 * b
        )
    return 4 * (d + 5) * (grad_norm**2 + sigma**2) / b + 1.5 * nu**2 * M**2 * (d + 3) ** 3


def one_point_variance_bound(d, grad_norm, sigma, b, nu, M, centered=False):
    """Same bounds under one-point feedback with additive value noise sigma;
    the independent noise pair adds the sigma^2/(b nu^2) terms."""
    if centered:
        return (
            2 * (d + 5) * grad_norm**2 / b
            + nu**2 * M**2 * (d + 3) ** 3 / (2 * b)
            + 2 * d * sigma**2 / (b * nu**2)
        )
    return (
        4 * (d + 5) * (grad_norm**2 + sigma**2 / nu**2) / b
        + 1.5 * nu**2 * M**2 * (d + 3) ** 3
        + 4 * d * sigma**2 / (b * nu**2)
    )


def reference_gradient(oracle: StochasticOracle, theta) -> np.ndarray:
    """Exact gradient when available, else a high-precision central difference.

    The fallback needs noiseless evaluations; a noisy gradient-free target has
    no usable reference and the diagnostic is unavailable.
    """
    from .oracle import Noiseless

    theta = np.asarray(theta, dtype=float)
    potential = oracle.potential
    if potential.has_grad:
        return potential.grad(theta)
    if not isinstance(oracle.noise, Noiseless):
        raise ValueError(
            "bias/variance diagnostics need an exact gradient or a noiseless oracle"
        )
    return finite_difference_grad(potential, theta)


@dataclass(frozen=True)
class EstimatorDiagnostics:
    """Monte-Carlo summary of one estimator configuration at one query point."""

    bias_norm: float
    bias_se: float
    bias_bound: float
    var_vs_f: float
    var_vs_f_se: float
    var_vs_fnu_proxy: float
    var_bound: float
    reps: int


def mc_bias(oracle, theta, cfg, reps, rng):
    """Monte-Carlo bias of the estimator: (||mean g - grad f||, standard error)."""
    diag = diagnose_estimator(oracle, theta, cfg, reps, rng)
    return diag.bias_norm, diag.bias_se


def mc_variance(oracle, theta, cfg, reps, rng):
    """Monte-Carlo variance around grad f and around the estimator's own mean.

    The second value estimates E||g - grad f_nu||^2 (the mean of g is the
    smoothed gradient), which has no closed form for general targets.
    """
    diag = diagnose_estimator(oracle, theta, cfg, reps, rng)
    return diag.var_vs_f, diag.var_vs_fnu_proxy


def diagnose_estimator(
    oracle: StochasticOracle, theta, cfg: SmoothingConfig, reps: int, rng
) -> EstimatorDiagnostics:
    """Run ``reps`` independent estimates and compare with the analytic bounds."""
    if reps < 1000:
        raise ValueError("diagnostics need reps >= 1000 for stable standard errors")
    theta = np.asarray(theta, dtype=float)
    ref = reference_gradient(oracle, theta)
    estimates = _estimate_batch(oracle, theta, cfg, rng, reps)
    d = theta.shape[0]

    mean_g = estimates.mean(axis=0)
    bias_norm = float(np.linalg.norm(mean_g - ref))
    bias_se = float(np.sqrt(estimates.var(axis=0, ddof=1).sum() / reps))

    sq_err = np.sum((estimates - ref) ** 2, axis=1)
    var_vs_f = float(sq_err.mean())
    var_vs_f_se = float(sq_err.std(ddof=1) / np.sqrt(reps))
    var_vs_fnu = float(np.sum((estimates - mean_g) ** 2, axis=1).mean())

    M = oracle.potential.M
    grad_norm = float(np.linalg.norm(ref))
    if oracle.feedback == ONE_POINT:
        sigma = oracle.noise.value_sigma()
        var_bound = one_point_variance_bound(d, grad_norm, sigma, cfg.b, cfg.nu, M)
    else:
        sigma = oracle.noise.gradient_noise_sigma(oracle.potential, theta)
        var_bound = two_point_variance_bound(d, grad_norm, sigma, cfg.b, cfg.nu, M)

    return EstimatorDiagnostics(
        bias_norm=bias_norm,
        bias_se=bias_se,
        bias_bound=smoothing_bias_bound(M, cfg.nu, d),
        var_vs_f=var_vs_f,
        var_vs_f_se=var_vs_f_se,
        var_vs_fnu_proxy=var_vs_fnu,
        var_bound=float(var_bound),
        reps=reps,
    )
