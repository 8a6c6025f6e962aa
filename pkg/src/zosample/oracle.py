"""Noise models and the stochastic zeroth-order oracle.

The oracle is the only thing samplers may touch: it returns noisy unbiased
evaluations F(theta, xi) of the potential and counts every function
evaluation. Two feedback modes exist. In "two-point" mode both evaluations of
a finite-difference pair share one noise draw xi; in "one-point" mode each
evaluation draws its own xi.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .targets import Potential

TWO_POINT = "two-point"
ONE_POINT = "one-point"
FEEDBACK_MODES = (TWO_POINT, ONE_POINT)


class NoiseModel:
    """Base class: xi draws plus how they corrupt an exact value f(theta)."""

    def draw(self, rng, size):
        raise NotImplementedError

    def apply(self, values, xi):
        """Return F(theta, xi) given exact values f(theta); elementwise."""
        raise NotImplementedError

    def value_sigma(self) -> float:
        """Std of F(theta, xi) - f(theta) for additive-type models (0 if exact)."""
        return 0.0

    def gradient_noise_sigma(self, potential: Potential, theta) -> float:
        """sqrt(E || grad F - grad f ||^2) at theta: the sigma gradient bounds use."""
        return 0.0


@dataclass(frozen=True)
class Noiseless(NoiseModel):
    def draw(self, rng, size):
        return np.zeros(size)

    def apply(self, values, xi):
        return np.asarray(values, dtype=float)


@dataclass(frozen=True)
class AdditiveGaussian(NoiseModel):
    """F(theta, xi) = f(theta) + xi with xi ~ N(0, sigma^2)."""

    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def draw(self, rng, size):
        return self.sigma * rng.standard_normal(size)

    def apply(self, values, xi):
        return np.asarray(values, dtype=float) + xi

    def value_sigma(self) -> float:
        return self.sigma


@dataclass(frozen=True)
class Multiplicative(NoiseModel):
    """F(theta, xi) = xi * f(theta) with xi = 1 + sigma_rel * U(-sqrt3, sqrt3).

    The bounded factor has mean 1 and standard deviation sigma_rel, so the
    evaluation is unbiased and the induced gradient noise stays bounded on
    compact query regions.
    """

    sigma_rel: float

    def __post_init__(self):
        if self.sigma_rel < 0:
            raise ValueError("sigma_rel must be nonnegative")

    def draw(self, rng, size):
        return 1.0 + self.sigma_rel * rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size)

    def apply(self, values, xi):
        return xi * np.asarray(values, dtype=float)

    def gradient_noise_sigma(self, potential: Potential, theta) -> float:
        if not potential.has_grad:
            raise ValueError("gradient noise level needs the exact gradient")
        return self.sigma_rel * float(np.linalg.norm(potential.grad(np.asarray(theta))))


@dataclass(frozen=True)
class GeneralLipschitz(NoiseModel):
    """F(theta, xi) = f(theta) + L * xi for a caller-supplied zero-mean sampler.

    |F(theta, xi) - F(theta, xi')| = L |xi - xi'| by construction, and
    unbiasedness follows from E[xi] = 0. ``xi_std`` is the sampler's standard
    deviation, needed by one-point variance bounds.
    """

    lipschitz: float
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    xi_std: float = 1.0

    def __post_init__(self):
        if self.lipschitz <= 0:
            raise ValueError("Lipschitz constant must be positive")

    def draw(self, rng, size):
        return np.asarray(self.sampler(rng, size), dtype=float)

    def apply(self, values, xi):
        return np.asarray(values, dtype=float) + self.lipschitz * xi

    def value_sigma(self) -> float:
        return self.lipschitz * self.xi_std


@dataclass
class StochasticOracle:
    """Noisy black-box access to a potential, with exact call accounting.

    One oracle instance belongs to one chain; ``calls`` counts every single
    function evaluation (a pair query costs 2, a batch of k pairs costs 2k).
    """

    potential: Potential
    noise: NoiseModel = field(default_factory=Noiseless)
    feedback: str = TWO_POINT
    rng: Optional[np.random.Generator] = None
    calls: int = 0

    def __post_init__(self):
        if self.feedback not in FEEDBACK_MODES:
            raise ValueError(f"feedback must be one of {FEEDBACK_MODES}")
        if self.rng is None:
            self.rng = np.random.default_rng()

    @property
    def dim(self) -> int:
        return self.potential.dim

    def query(self, theta) -> float:
        """One noisy evaluation F(theta, xi)."""
        theta = self._check(theta)
        self.calls += 1
        xi = self.noise.draw(self.rng, ())
        return float(self.noise.apply(self.potential.value(theta), xi))

    def query_pair(self, theta_a, theta_b):
        """Evaluate both points; two-point feedback reuses a single xi draw."""
        a, b = self.query_pair_batch(self._check(theta_a)[None], self._check(theta_b)[None])
        return float(a[0]), float(b[0])

    def query_pair_batch(self, thetas_a, thetas_b):
        """Vectorized pair queries: row i of each input forms pair i.

        Returns (values_a, values_b) of shape (k,) and adds 2k to ``calls``.
        """
        thetas_a = np.asarray(thetas_a, dtype=float)
        thetas_b = np.asarray(thetas_b, dtype=float)
        if thetas_a.shape != thetas_b.shape or thetas_a.shape[-1] != self.dim:
            raise ValueError(
                f"pair query needs matching (k, {self.dim}) arrays, got "
                f"{thetas_a.shape} and {thetas_b.shape}"
            )
        k = thetas_a.shape[0]
        self.calls += 2 * k
        fa = self.potential.value(thetas_a)
        fb = self.potential.value(thetas_b)
        xi_a = self.noise.draw(self.rng, k)
        xi_b = xi_a if self.feedback == TWO_POINT else self.noise.draw(self.rng, k)
        return self.noise.apply(fa, xi_a), self.noise.apply(fb, xi_b)

    def _check(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ValueError(f"expected a point of shape ({self.dim},), got {theta.shape}")
        return theta


def noise_from_config(spec: dict) -> NoiseModel:
    """Build a noise model from a config mapping ``{"kind": ..., ...}``."""
    spec = dict(spec)
    kind = spec.pop("kind", "noiseless")
    if kind == "noiseless":
        model = Noiseless()
    elif kind == "additive-gaussian":
        model = AdditiveGaussian(sigma=float(spec.pop("sigma")))
    elif kind == "multiplicative":
        model = Multiplicative(sigma_rel=float(spec.pop("sigma_rel")))
    else:
        raise ValueError(f"unknown noise kind {kind!r}")
    if spec:
        raise ValueError(f"unknown noise fields {sorted(spec)}")
    return model
