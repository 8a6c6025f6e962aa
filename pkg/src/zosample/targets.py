"""Target potentials: negative log-densities f with pi(x) ~ exp(-f(x)).

Every built-in potential evaluates in batch: ``value`` accepts a single point
of shape (d,) or a stack of points of shape (n, d). Gradients follow the same
convention. Curvature constants (m, M) are analytic bounds, not estimates.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp


@dataclass(frozen=True)
class Potential:
    """A target potential together with the structure samplers need.

    Attributes
    ----------
    dim : int
        Dimension d of the state space.
    value : callable
        Maps (d,) or (n, d) arrays to scalar / (n,) potential values.
    grad : callable or None
        Exact gradient with the same batch convention; None for pure
        black boxes.
    m : float
        Strong-convexity constant (0 when not strongly convex).
    M : float
        Gradient-Lipschitz constant, M >= m.
    lsi_constant : float or None
        Log-Sobolev constant of pi when known or assumed by the caller.
    minimizer : ndarray or None
        A global minimizer of f when known.
    true_mean, true_cov : ndarray or None
        Exact moments of pi for targets with closed-form moments.
    meta : dict
        Extra structure (e.g. the precision matrix of a Gaussian target)
        used by restriction and diagnostics.
    """

    dim: int
    value: Callable[[np.ndarray], np.ndarray]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    m: float = 0.0
    M: float = 1.0
    lsi_constant: Optional[float] = None
    minimizer: Optional[np.ndarray] = None
    true_mean: Optional[np.ndarray] = None
    true_cov: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("potential dimension must be >= 1")
        if self.M <= 0:
            raise ValueError("smoothness constant M must be positive")
        if self.m < 0 or self.m > self.M:
            raise ValueError("need 0 <= m <= M, got m=%g, M=%g" % (self.m, self.M))

    @property
    def has_grad(self) -> bool:
        return self.grad is not None

    @property
    def kappa(self) -> float:
        """Condition number M/m; defined only for strongly convex targets."""
        if self.m <= 0:
            raise ValueError("condition number undefined for m = 0")
        return self.M / self.m

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        return self.value(theta)


def _as_spd(mat: np.ndarray, name: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {mat.shape}")
    if not np.allclose(mat, mat.T, atol=1e-10):
        raise ValueError(f"{name} must be symmetric")
    eigvals = np.linalg.eigvalsh(mat)
    if eigvals[0] <= 0:
        raise ValueError(
            f"{name} must be positive definite (smallest eigenvalue {eigvals[0]:.3e})"
        )
    return mat


def make_gaussian_target(mean, precision) -> Potential:
    """Gaussian potential f(x) = (x-mean)' P (x-mean) / 2 with known moments."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    precision = _as_spd(precision, "precision")
    d = mean.shape[0]
    if precision.shape[0] != d:
        raise ValueError("mean and precision dimensions disagree")
    eigvals = np.linalg.eigvalsh(precision)
    cov = np.linalg.inv(precision)

    def value(theta):
        theta = np.asarray(theta, dtype=float)
        delta = theta - mean
        return 0.5 * np.einsum("...i,ij,...j->...", delta, precision, delta)

    def grad(theta):
        theta = np.asarray(theta, dtype=float)
        return (theta - mean) @ precision

    return Potential(
        dim=d,
        value=value,
        grad=grad,
        m=float(eigvals[0]),
        M=float(eigvals[-1]),
        minimizer=mean.copy(),
        true_mean=mean.copy(),
        true_cov=cov,
        meta={"kind": "gaussian", "precision": precision},
    )


def make_mixture_target(weights, means, covariances, lsi_constant=None) -> Potential:
    """Gaussian-mixture potential f(x) = -log sum_k w_k N(x; mu_k, Sigma_k).

    Not strongly log-concave in general, so m = 0. The smoothness constant is
    the conservative bound

        M = max_k lambda_max(Sigma_k^-1) + D^2 / 4,
        D = max_{j,k} || Sigma_j^-1 mu_j - Sigma_k^-1 mu_k ||,

    which is exact for shared covariances (the Hessian is a responsibility
    average of the component precisions minus a score covariance whose spread
    is at most D) and conservative otherwise.
    """
    weights = np.asarray(weights, dtype=float)
    means = np.atleast_2d(np.asarray(means, dtype=float))
    covariances = np.asarray(covariances, dtype=float)
    if covariances.ndim == 2:
        covariances = covariances[None, :, :]
    k, d = means.shape
    if weights.shape != (k,) or covariances.shape != (k, d, d):
        raise ValueError("weights, means and covariances have inconsistent shapes")
    if np.any(weights <= 0):
        raise ValueError("mixture weights must be positive")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError(f"mixture weights must sum to 1 (off by {weights.sum() - 1.0:.3e})")

    covariances = np.stack([_as_spd(c, f"covariance[{i}]") for i, c in enumerate(covariances)])
    precisions = np.stack([np.linalg.inv(c) for c in covariances])
    log_norm = np.array(
        [-0.5 * (d * np.log(2 * np.pi) + np.linalg.slogdet(c)[1]) for c in covariances]
    )
    log_w = np.log(weights)

    def _log_comp(theta):
        # (..., k) array of log w_k + log N(theta; mu_k, Sigma_k)
        theta = np.asarray(theta, dtype=float)
        delta = theta[..., None, :] - means  # (..., k, d)
        quad = np.einsum("...ki,kij,...kj->...k", delta, precisions, delta)
        return log_w + log_norm - 0.5 * quad

    def value(theta):
        return -logsumexp(_log_comp(theta), axis=-1)

    def grad(theta):
        theta = np.asarray(theta, dtype=float)
        lc = _log_comp(theta)
        resp = np.exp(lc - logsumexp(lc, axis=-1, keepdims=True))  # (..., k)
        delta = theta[..., None, :] - means
        scores = np.einsum("kij,...kj->...ki", precisions, delta)  # (..., k, d)
        return np.einsum("...k,...ki->...i", resp, scores)

    lam_max = max(np.linalg.eigvalsh(p)[-1] for p in precisions)
    anchors = np.einsum("kij,kj->ki", precisions, means)
    spread = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            spread = max(spread, float(np.linalg.norm(anchors[i] - anchors[j])))
    smoothness = float(lam_max + 0.25 * spread**2)

    mix_mean = weights @ means
    second = np.einsum("k,kij->ij", weights, covariances) + np.einsum(
        "k,ki,kj->ij", weights, means, means
    )
    mix_cov = second - np.outer(mix_mean, mix_mean)

    return Potential(
        dim=d,
        value=value,
        grad=grad,
        m=0.0,
        M=smoothness,
        lsi_constant=lsi_constant,
        true_mean=mix_mean,
        true_cov=mix_cov,
        meta={"kind": "mixture"},
    )


def make_logistic_target(features, labels, ridge: float) -> Potential:
    """Ridge-regularized Bayesian logistic-regression potential.

    f(theta) = sum_i log(1 + exp(x_i' theta)) - y_i x_i' theta
               + (ridge/2) ||theta||^2,
    with m = ridge and M = ridge + lambda_max(X'X)/4.
    """
    X = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(labels, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("logistic target needs at least one data row")
    if y.shape != (X.shape[0],):
        raise ValueError("labels must be one value per feature row")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must lie in {0, 1}")
    if ridge <= 0:
        raise ValueError("ridge must be positive")
    d = X.shape[1]
    gram_top = float(np.linalg.eigvalsh(X.T @ X)[-1])

    def value(theta):
        theta = np.asarray(theta, dtype=float)
        z = theta @ X.T  # (..., n)
        return np.logaddexp(0.0, z).sum(axis=-1) - z @ y + 0.5 * ridge * np.sum(
            theta**2, axis=-1
        )

    def grad(theta):
        theta = np.asarray(theta, dtype=float)
        z = theta @ X.T
        p = 1.0 / (1.0 + np.exp(-z))
        return (p - y) @ X + ridge * theta

    return Potential(
        dim=d,
        value=value,
        grad=grad,
        m=float(ridge),
        M=float(ridge + 0.25 * gram_top),
        meta={"kind": "logistic"},
    )


def make_sparse_quadratic_target(dim: int, support, coeffs=None) -> Potential:
    """Potential f(x) = sum_{j in support} c_j x_j^2, depending on |support| coords.

    The selection fixtures use this family: the gradient is supported on
    ``support`` and has entries 2 c_j x_j there.
    """
    support = np.asarray(sorted(set(int(j) for j in support)), dtype=int)
    if support.size == 0 or support[0] < 0 or support[-1] >= dim:
        raise ValueError("support must be a nonempty subset of range(dim)")
    if coeffs is None:
        coeffs = np.ones(support.size)
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (support.size,) or np.any(coeffs <= 0):
        raise ValueError("coeffs must be positive, one per support coordinate")

    def value(theta):
        theta = np.asarray(theta, dtype=float)
        return np.sum(coeffs * theta[..., support] ** 2, axis=-1)

    def grad(theta):
        theta = np.asarray(theta, dtype=float)
        g = np.zeros_like(theta)
        g[..., support] = 2.0 * coeffs * theta[..., support]
        return g

    return Potential(
        dim=dim,
        value=value,
        grad=grad,
        m=0.0,
        M=float(2.0 * coeffs.max()),
        minimizer=np.zeros(dim),
        meta={"kind": "sparse_quadratic", "support": support, "coeffs": coeffs},
    )


def load_logistic_csv(path, ridge: float) -> Potential:
    """Build a logistic target from a CSV file with header ``y,x1,...,xd``."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = list(data.dtype.names)
    if names[0] != "y":
        raise ValueError("logistic CSV must start with a 'y' column")
    rows = np.stack([data[n] for n in names], axis=-1)
    rows = np.atleast_2d(rows)
    return make_logistic_target(rows[:, 1:], rows[:, 0], ridge)


def finite_difference_grad(potential: Potential, theta, delta: Optional[float] = None):
    """Central-difference gradient, the reference when no exact grad exists."""
    theta = np.asarray(theta, dtype=float)
    if delta is None:
        delta = 1e-5 * (1.0 + float(np.linalg.norm(theta)))
    g = np.empty_like(theta)
    for j in range(theta.shape[0]):
        step = np.zeros_like(theta)
        step[j] = delta
        g[j] = (potential.value(theta + step) - potential.value(theta - step)) / (2 * delta)
    return g


def check_potential(potential: Potential, rng, n_points: int = 5) -> None:
    """Spot-check the declared gradient and curvature constants at random points.

    Raises AssertionError on violation; used by tests and the CLI self-checks.
    """
    if not potential.has_grad:
        return
    d = potential.dim
    for _ in range(n_points):
        theta = rng.standard_normal(d)
        fd = finite_difference_grad(potential, theta)
        tol = potential.M * 1e-4 * (1 + np.linalg.norm(theta)) + 1e-6
        err = np.linalg.norm(fd - potential.grad(theta))
        assert err <= tol, f"gradient disagrees with finite differences by {err:.3e}"
        other = rng.standard_normal(d)
        dg = potential.grad(theta) - potential.grad(other)
        dx = theta - other
        assert dg @ dx >= potential.m * dx @ dx - 1e-9, "strong convexity violated"
        assert np.linalg.norm(dg) <= potential.M * np.linalg.norm(dx) + 1e-9, (
            "gradient Lipschitz bound violated"
        )
