"""Gradient-free variable selection for potentials depending on few coordinates.

For an s-sparse potential (f depends on the same s of d coordinates
everywhere, with on-support gradient entries of magnitude at least a at the
query point), averaging n single-probe gradient estimates and thresholding
coordinate magnitudes at tau = (a - M nu sqrt(s)) / 2 recovers the support
with high probability. Samplers then run on the selected coordinates only,
with the remaining ones frozen at the query point.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .estimator import SmoothingConfig, estimate_gradient
from .oracle import StochasticOracle
from .targets import Potential

# sub-Gaussian norm constant of a standard normal vector, sqrt(8 / (3 ln2 (1 - ln2)))
SUBEXP_CONSTANT = math.sqrt(8.0 / (3.0 * math.log(2.0) * (1.0 - math.log(2.0))))


@dataclass(frozen=True)
class SparsityModel:
    """Sparsity structure (s, a) plus the gradient-norm bound R at query points."""

    s: int
    a: float
    R: float
    true_support: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.s < 1:
            raise ValueError("sparsity level s must be >= 1")
        if self.a <= 0 or self.R <= 0:
            raise ValueError("signal strength a and gradient bound R must be positive")


def selection_threshold(a: float, M: float, nu: float, s: int) -> float:
    """Threshold tau = (a - M nu sqrt(s)) / 2; needs nu <= a / (2 M sqrt(s))."""
    nu_max = a / (2.0 * M * math.sqrt(s))
    if nu > nu_max:
        raise ValueError(
            f"smoothing radius nu={nu:g} too large: needs nu <= a/(2 M sqrt(s)) = {nu_max:g}"
        )
    return (a - M * nu * math.sqrt(s)) / 2.0


def required_samples(R, s, a, d, err, K1: float = 1.0, K2: float = 1.0) -> int:
    """Probe count guaranteeing misselection probability at most ``err``.

    n = ceil(max(q (log(4d/err)/K2)^{3/2}, K1 q, q^4)) with q = 8 R C sqrt(s)/a
    and C the sub-exponential concentration constant. K1, K2 are the unknown
    absolute constants of that concentration bound (defaults 1).
    """
    if not 0 < err < 1:
        raise ValueError("err must lie in (0, 1)")
    q = 8.0 * R * SUBEXP_CONSTANT * math.sqrt(s) / a
    first = q * (math.log(4.0 * d / err) / K2) ** 1.5
    return int(math.ceil(max(first, K1 * q, q**4)))


def estimate_support(
    oracle: StochasticOracle, theta, n: int, nu: float, tau: float, rng
) -> np.ndarray:
    """Average n single-probe gradient estimates at theta and threshold at tau.

    Returns the sorted index set {j : |g_j| >= tau}. Consumes 2n oracle calls.
    The guarantee assumes ||grad f(theta)|| <= R at the query point, which a
    black box cannot verify; that bound is the caller's obligation.
    """
    if n < 1:
        raise ValueError("need at least one probe")
    g = estimate_gradient(oracle, theta, SmoothingConfig(nu=nu, b=n), rng).g
    return np.flatnonzero(np.abs(g) >= tau)


def embed(z, support, anchor):
    """Lift restricted coordinates z back to the full space, anchor elsewhere."""
    z = np.asarray(z, dtype=float)
    anchor = np.asarray(anchor, dtype=float)
    full = np.broadcast_to(anchor, z.shape[:-1] + anchor.shape).copy()
    full[..., support] = z
    return full


def restrict_potential(target: Potential, support, anchor) -> Potential:
    """Freeze off-support coordinates at ``anchor`` and expose the rest.

    Curvature bounds carry over (restriction can only shrink the Hessian
    range). For Gaussian targets the conditional moments of the restricted
    density are propagated from the stored precision matrix.
    """
    support = np.asarray(sorted(set(int(j) for j in support)), dtype=int)
    if support.size == 0:
        raise ValueError("empty support: lower the threshold tau and reselect")
    if support[0] < 0 or support[-1] >= target.dim:
        raise ValueError("support indices outside the target dimension")
    anchor = np.asarray(anchor, dtype=float)
    if anchor.shape != (target.dim,):
        raise ValueError("anchor point must live in the full space")

    def value(z):
        return target.value(embed(z, support, anchor))

    grad = None
    if target.has_grad:

        def grad(z):  # noqa: F811 - deliberate conditional definition
            return target.grad(embed(z, support, anchor))[..., support]

    true_mean = true_cov = minimizer = None
    meta = {"kind": "restricted", "support": support, "anchor": anchor}
    precision = target.meta.get("precision")
    if precision is not None and target.true_mean is not None:
        rest = np.setdiff1d(np.arange(target.dim), support)
        p_ss = precision[np.ix_(support, support)]
        mu_s = target.true_mean[support]
        if rest.size:
            p_sr = precision[np.ix_(support, rest)]
            shift = np.linalg.solve(p_ss, p_sr @ (anchor[rest] - target.true_mean[rest]))
            true_mean = mu_s - shift
        else:
            true_mean = mu_s.copy()
        true_cov = np.linalg.inv(p_ss)
        minimizer = true_mean.copy()
        meta["precision"] = p_ss

    return Potential(
        dim=int(support.size),
        value=value,
        grad=grad,
        m=target.m,
        M=target.M,
        lsi_constant=target.lsi_constant,
        minimizer=minimizer,
        true_mean=true_mean,
        true_cov=true_cov,
        meta=meta,
    )


def restrict_and_sample(
    target: Potential,
    support,
    anchor,
    algorithm: str,
    params,
    n_chains: int,
    seed: int,
    noise=None,
    thin=None,
):
    """Run a sampler on the selected coordinates; returns chains over R^|support|.

    Chain positions live in the restricted space; ``embed`` maps them back.
    Selection-phase oracle calls are not included in the chains' counters and
    should be added by the caller when reporting totals.
    """
    from .oracle import Noiseless
    from .samplers import run_sampler

    restricted = restrict_potential(target, support, anchor)
    noise = noise if noise is not None else Noiseless()
    anchor = np.asarray(anchor, dtype=float)
    sup = restricted.meta["support"]
    return run_sampler(
        algorithm,
        restricted,
        noise,
        params,
        n_chains=n_chains,
        seed=seed,
        thin=thin,
        x_init=anchor[sup],
    )
