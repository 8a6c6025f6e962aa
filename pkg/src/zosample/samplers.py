"""Zeroth-order Langevin samplers and their first-order baselines.

Three gradient-free samplers are implemented:

* ``zo-lmc``   Euler step of the overdamped diffusion with an estimated
  gradient: x' = x - h g + sqrt(2h) eps.
* ``zo-klmc``  Exact exponential integrator of the kinetic (underdamped)
  diffusion with friction gamma, gradient frozen over each step. The
  position/velocity noise pair carries the exact covariance of the underlying
  Ornstein-Uhlenbeck integrals (``klmc_noise_cov``); the cruder i.i.d. noise
  variant is available behind a flag for ablation.
* ``zo-rmp``   Randomized midpoint discretization of the kinetic diffusion
  scaled by u = 1/M: the gradient is re-estimated at a uniformly random
  intermediate time alpha*h inside each step, and the three noise terms share
  one Brownian path (``rmp_noise_cov``).

Chains are reproducible: a root seed spawns one independent counter-based
stream per chain (plus one for its oracle), so (seed, params) determines every
trace bit for bit.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .estimator import SmoothingConfig, estimate_gradient
from .oracle import NoiseModel, Noiseless, StochasticOracle
from .targets import Potential
from .tuning import LSI, TunedParams, calls_per_step

ALGORITHMS = ("zo-lmc", "zo-klmc", "zo-rmp", "lmc-baseline", "klmc-baseline")


class ChainDivergenceError(RuntimeError):
    """A chain produced a non-finite coordinate (step size too large)."""

    def __init__(self, algorithm: str, step: int):
        self.algorithm = algorithm
        self.step = step
        super().__init__(
            f"{algorithm} diverged at step {step}: non-finite state "
            f"(step size likely too large for this target)"
        )


# ---------------------------------------------------------------------------
# states


@dataclass
class OverdampedState:
    x: np.ndarray


@dataclass
class KineticState:
    x: np.ndarray
    v: np.ndarray


@dataclass
class RmpState:
    x: np.ndarray
    v: np.ndarray
    u_rmp: float  # inverse smoothness 1/M

    def __post_init__(self):
        if self.u_rmp <= 0:
            raise ValueError("u_rmp must be positive")


@dataclass
class Chain:
    """Recorded output of one chain: thinned trace plus exact call counts."""

    algorithm: str
    chain_index: int
    seed: int
    steps: np.ndarray  # step indices of the recorded states
    states: np.ndarray  # (len(steps), d) positions
    final_state: np.ndarray
    oracle_calls: int  # sampling phase only
    warmup_calls: int  # warm-start phase (zo-rmp), counted separately
    n_steps: int
    params: Optional[TunedParams] = None
    final_velocity: Optional[np.ndarray] = None


# ---------------------------------------------------------------------------
# integrator coefficients and exact noise covariances


def psi(k: int, gamma: float, t: float) -> float:
    """Exponential-kernel coefficients psi_0 = exp(-gamma t), psi_{k+1} = int_0^t psi_k.

    Stable as gamma*t -> 0 via expm1 / series evaluation.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    x = gamma * t
    if k == 0:
        return math.exp(-x)
    if k == 1:
        return -math.expm1(-x) / gamma
    if k == 2:
        if x < 1e-2:
            # (x + exp(-x) - 1) / x^2 = 1/2 - x/6 + x^2/24 - x^3/120 + x^4/720
            series = 0.5 - x / 6 + x**2 / 24 - x**3 / 120 + x**4 / 720
            return t * t * series
        psi1 = -math.expm1(-x) / gamma
        return (t - psi1) / gamma
    raise ValueError("k must be 0, 1 or 2")


def _e_c(c: float, t: float) -> float:
    """(1 - exp(-c t)) / c, stable for small c*t."""
    return -math.expm1(-c * t) / c


def klmc_noise_cov(gamma: float, h: float) -> np.ndarray:
    """Per-coordinate covariance of the kinetic integrator's (velocity, position) noise.

    The pair is (sqrt(2 gamma) int_0^h e^{-gamma(h-s)} dW_s,
                 sqrt(2 gamma) int_0^h psi_1(h-s) dW_s); integrating the kernel
    products gives

        Var_v = 1 - e^{-2 gamma h}
        Var_x = (2/gamma) (h - 2 psi_1(h) + (1 - e^{-2 gamma h})/(2 gamma))
        Cov   = 2 psi_1(h) - (1 - e^{-2 gamma h}) / gamma.
    """
    if gamma <= 0 or h <= 0:
        raise ValueError("gamma and h must be positive")
    x = gamma * h
    var_v = -math.expm1(-2 * x)
    if x < 1e-2:
        # gamma*(h - 2 psi1 + e2) = x^3/3 - x^4/4 + 7x^5/60 - x^6/24 + O(x^7)
        var_x = (2 / gamma**2) * (x**3 / 3 - x**4 / 4 + 7 * x**5 / 60 - x**6 / 24)
        # gamma*(psi1 - e2) = x^2/2 - x^3/2 + 7x^4/24 - x^5/8 + O(x^6)
        cov = (2 / gamma) * (x**2 / 2 - x**3 / 2 + 7 * x**4 / 24 - x**5 / 8)
    else:
        psi1 = _e_c(gamma, h)
        e2 = -math.expm1(-2 * x) / (2 * gamma)
        var_x = (2 / gamma) * (h - 2 * psi1 + e2)
        cov = 2 * (psi1 - e2)
    return _ensure_psd(np.array([[var_v, cov], [cov, var_x]]))


def rmp_noise_cov(h: float, alpha: float, u_rmp: float) -> np.ndarray:
    """Per-coordinate 3x3 covariance of the randomized-midpoint noise triple.

    Components (all over one shared Brownian path B):

        z1 = sqrt(u) int_0^{ah} (1 - e^{-2(ah-s)}) dB_s     (midpoint position)
        z2 = sqrt(u) int_0^{h}  (1 - e^{-2(h-s)})  dB_s     (full-step position)
        z3 = 2 sqrt(u) int_0^{h} e^{-2(h-s)} dB_s           (full-step velocity)

    with a = alpha. Entries are closed-form kernel-product integrals.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    if h <= 0 or u_rmp <= 0:
        raise ValueError("h and u_rmp must be positive")
    a = alpha * h

    def quad_int(t):  # int_0^t (1 - e^{-2s})^2 ds
        return t - 2 * _e_c(2.0, t) + _e_c(4.0, t)

    c11 = u_rmp * quad_int(a)
    c22 = u_rmp * quad_int(h)
    c33 = 4 * u_rmp * _e_c(4.0, h)
    # int_0^a e^{-2(h-s)} ds and int_0^a e^{-2(a+h-2s)} ds
    i1 = (math.exp(-2 * (h - a)) - math.exp(-2 * h)) / 2
    i2 = (math.exp(-2 * (h - a)) - math.exp(-2 * (a + h))) / 4
    c12 = u_rmp * (a - _e_c(2.0, a) - i1 + i2)
    c13 = 2 * u_rmp * (i1 - i2)
    c23 = 2 * u_rmp * (_e_c(2.0, h) - _e_c(4.0, h))
    cov = np.array([[c11, c12, c13], [c12, c22, c23], [c13, c23, c33]])
    return _ensure_psd(cov)


def _ensure_psd(cov: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Symmetrize and clip rounding-level negative eigenvalues; fail otherwise."""
    sym = (cov + cov.T) / 2
    vals = np.linalg.eigvalsh(sym)
    if vals[0] >= 0:
        return sym
    if vals[0] < -tol:
        raise ValueError(f"noise covariance has negative eigenvalue {vals[0]:.3e}")
    vals_c, vecs = np.linalg.eigh(sym)
    return (vecs * np.clip(vals_c, 0.0, None)) @ vecs.T


def _factor_psd(cov: np.ndarray) -> np.ndarray:
    """A with A A' = cov; Cholesky when possible, eigen factor otherwise."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh((cov + cov.T) / 2)
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


@lru_cache(maxsize=128)
def _klmc_factor(gamma: float, h: float):
    return _factor_psd(klmc_noise_cov(gamma, h))


# ---------------------------------------------------------------------------
# single steps


def zo_lmc_step(
    state: OverdampedState, oracle: StochasticOracle, cfg: SmoothingConfig, h: float, rng
) -> OverdampedState:
    """One overdamped Euler step with an estimated gradient; 2b oracle calls."""
    if h < 0:
        raise ValueError("step size must be nonnegative")
    g = estimate_gradient(oracle, state.x, cfg, rng).g
    eps = rng.standard_normal(state.x.shape)
    return OverdampedState(x=state.x - h * g + math.sqrt(2 * h) * eps)


def zo_klmc_step(
    state: KineticState,
    oracle: StochasticOracle,
    cfg: SmoothingConfig,
    h: float,
    gamma: float,
    rng,
    iid_noise: bool = False,
) -> KineticState:
    """One kinetic step; (velocity, position) noise drawn jointly per coordinate.

    ``iid_noise=True`` replaces the exact Ornstein-Uhlenbeck noise covariance
    by independent sqrt(2 gamma)-scaled standard normals (ablation only).
    """
    if h == 0:
        return KineticState(x=state.x.copy(), v=state.v.copy())
    g = estimate_gradient(oracle, state.x, cfg, rng).g
    d = state.x.shape[0]
    if iid_noise:
        noise = math.sqrt(2 * gamma) * rng.standard_normal((2, d))
    else:
        noise = _klmc_factor(gamma, h) @ rng.standard_normal((2, d))
    p0, p1, p2 = psi(0, gamma, h), psi(1, gamma, h), psi(2, gamma, h)
    v_next = p0 * state.v - p1 * g + noise[0]
    x_next = state.x + p1 * state.v - p2 * g + noise[1]
    return KineticState(x=x_next, v=v_next)


def zo_rmp_step(
    state: RmpState, oracle: StochasticOracle, cfg: SmoothingConfig, h: float, rng
) -> RmpState:
    """One randomized-midpoint step; two gradient estimates, 4b oracle calls."""
    if h == 0:
        return RmpState(x=state.x.copy(), v=state.v.copy(), u_rmp=state.u_rmp)
    u = state.u_rmp
    alpha = float(rng.uniform(0.0, 1.0))
    d = state.x.shape[0]
    noise = _factor_psd(rmp_noise_cov(h, alpha, u)) @ rng.standard_normal((3, d))

    a = alpha * h
    g_start = estimate_gradient(oracle, state.x, cfg, rng).g
    half_coeff = _e_c(2.0, a)  # (1 - e^{-2a}) / 2
    x_half = (
        state.x
        + half_coeff * state.v
        - (u / 2) * (a - half_coeff) * g_start
        + noise[0]
    )
    g_mid = estimate_gradient(oracle, x_half, cfg, rng).g
    tail = math.exp(-2 * (h - a))
    x_next = (
        state.x
        + _e_c(2.0, h) * state.v
        - (u * h / 2) * (1 - tail) * g_mid
        + noise[1]
    )
    v_next = state.v * math.exp(-2 * h) - u * h * tail * g_mid + noise[2]
    return RmpState(x=x_next, v=v_next, u_rmp=u)


def lmc_baseline_step(state: OverdampedState, potential: Potential, h: float, rng):
    """Exact-gradient overdamped Euler step (first-order baseline)."""
    eps = rng.standard_normal(state.x.shape)
    return OverdampedState(x=state.x - h * potential.grad(state.x) + math.sqrt(2 * h) * eps)


def klmc_baseline_step(state: KineticState, potential: Potential, h, gamma, rng):
    """Exact-gradient kinetic step (first-order baseline)."""
    g = potential.grad(state.x)
    noise = _klmc_factor(gamma, h) @ rng.standard_normal((2, state.x.shape[0]))
    p0, p1, p2 = psi(0, gamma, h), psi(1, gamma, h), psi(2, gamma, h)
    return KineticState(
        x=state.x + p1 * state.v - p2 * g + noise[1],
        v=p0 * state.v - p1 * g + noise[0],
    )


# ---------------------------------------------------------------------------
# warm start for the randomized-midpoint sampler


def warm_start_zo_sgd(
    oracle: StochasticOracle, x0: np.ndarray, m: float, M: float, rng, budget: Optional[int] = None
) -> np.ndarray:
    """Coarse zeroth-order SGD bringing f(x) - f(x*) down to the O(d) level.

    Budget defaults to 50 * kappa * ceil(log(d+1)) single-probe gradient
    estimates; each consumes two oracle calls.
    """
    d = oracle.dim
    kappa = M / m if m > 0 else M
    if budget is None:
        budget = int(50 * math.ceil(kappa) * math.ceil(math.log(d + 1)))
    cfg = SmoothingConfig(nu=1.0 / (d**1.5 * max(kappa, 1.0)), b=1)
    eta = 1.0 / (2 * M * (d + 4))
    x = np.asarray(x0, dtype=float).copy()
    for _ in range(budget):
        x = x - eta * estimate_gradient(oracle, x, cfg, rng).g
    return x


# ---------------------------------------------------------------------------
# chain runner


def run_single_chain(
    algorithm: str,
    target: Potential,
    noise: NoiseModel,
    params: TunedParams,
    seed: int,
    index: int,
    thin: Optional[int] = None,
    x_init=None,
    klmc_iid_noise: bool = False,
) -> "Chain":
    """Run chain ``index`` of the ensemble keyed by the root ``seed``.

    Chain streams are spawned from the root seed by index, so running chains
    one at a time or all at once yields identical traces.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    if algorithm.endswith("baseline") and not target.has_grad:
        raise ValueError("first-order baselines need a target with an exact gradient")
    n_steps = params.n_steps
    stride = thin if thin is not None else max(1, n_steps // 10_000)
    if stride < 1:
        raise ValueError("thin must be >= 1")
    if x_init is None:
        x_init = np.zeros(target.dim)
    x_init = np.asarray(x_init, dtype=float)
    if x_init.shape != (target.dim,):
        raise ValueError(f"x_init must have shape ({target.dim},)")

    child = np.random.SeedSequence(seed).spawn(index + 1)[index]
    chain_ss, oracle_ss = child.spawn(2)
    rng = np.random.Generator(np.random.Philox(chain_ss))
    oracle = StochasticOracle(
        potential=target,
        noise=noise,
        feedback=params.feedback,
        rng=np.random.Generator(np.random.Philox(oracle_ss)),
    )
    return _run_chain(
        algorithm, oracle, params, rng, x_init, n_steps, stride, index, seed, klmc_iid_noise
    )


def run_sampler(
    algorithm: str,
    target: Potential,
    noise: NoiseModel,
    params: TunedParams,
    n_chains: int,
    seed: int,
    thin: Optional[int] = None,
    x_init=None,
    klmc_iid_noise: bool = False,
    workers: int = 1,
) -> list:
    """Run independent chains and record thinned traces with exact call counts.

    Every chain owns a counter-based RNG stream and an oracle instance, both
    spawned deterministically from ``seed``, so reruns are bit-identical (and
    independent of ``workers``). Initialization follows the per-algorithm
    contracts: kinetic chains draw v0 ~ N(0, I); the randomized-midpoint
    sampler sets v0 = 0 and warm-starts x0 by coarse zeroth-order descent;
    LSI-regime chains draw x0 ~ N(x_init, I) so the initial law has finite KL
    divergence.
    """
    if n_chains < 1:
        raise ValueError("n_chains must be >= 1")

    def one(index):
        return run_single_chain(
            algorithm, target, noise, params, seed, index,
            thin=thin, x_init=x_init, klmc_iid_noise=klmc_iid_noise,
        )

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, range(n_chains)))
    return [one(index) for index in range(n_chains)]


def _run_chain(algorithm, oracle, params, rng, x_init, n_steps, stride, index, seed,
               klmc_iid_noise):
    target = oracle.potential
    d = target.dim
    cfg = (
        SmoothingConfig(nu=params.nu, b=params.b)
        if not algorithm.endswith("baseline")
        else None
    )
    h, gamma = params.h, params.gamma

    warmup_calls = 0
    if algorithm == "zo-rmp":
        x0 = warm_start_zo_sgd(oracle, x_init, target.m, target.M, rng)
        warmup_calls = oracle.calls
        state = RmpState(x=x0, v=np.zeros(d), u_rmp=1.0 / target.M)
    elif algorithm in ("zo-klmc", "klmc-baseline"):
        state = KineticState(x=x_init.copy(), v=rng.standard_normal(d))
    else:
        x0 = x_init.copy()
        if params.concavity == LSI:
            x0 = x0 + rng.standard_normal(d)
        state = OverdampedState(x=x0)

    rec_steps = [0]
    rec_states = [state.x.copy()]
    for step in range(1, n_steps + 1):
        if algorithm == "zo-lmc":
            state = zo_lmc_step(state, oracle, cfg, h, rng)
        elif algorithm == "zo-klmc":
            state = zo_klmc_step(state, oracle, cfg, h, gamma, rng, iid_noise=klmc_iid_noise)
        elif algorithm == "zo-rmp":
            state = zo_rmp_step(state, oracle, cfg, h, rng)
        elif algorithm == "lmc-baseline":
            state = lmc_baseline_step(state, target, h, rng)
        else:
            state = klmc_baseline_step(state, target, h, gamma, rng)
        if not np.all(np.isfinite(state.x)):
            raise ChainDivergenceError(algorithm, step)
        if step % stride == 0:
            rec_steps.append(step)
            rec_states.append(state.x.copy())

    return Chain(
        algorithm=algorithm,
        chain_index=index,
        seed=seed,
        steps=np.asarray(rec_steps),
        states=np.asarray(rec_states),
        final_state=state.x.copy(),
        oracle_calls=oracle.calls - warmup_calls,
        warmup_calls=warmup_calls,
        n_steps=n_steps,
        params=params,
        final_velocity=getattr(state, "v", None),
    )


# ---------------------------------------------------------------------------
# vectorized ensembles (bulk diagnostics; one shared stream, not per-chain)


def run_zo_lmc_ensemble(
    target: Potential,
    noise: NoiseModel,
    feedback: str,
    h: float,
    nu: float,
    b: int,
    n_steps: int,
    n_chains: int,
    seed: int,
    x_init=None,
    keep_last: int = 0,
):
    """Vectorized zeroth-order overdamped ensemble: all chains share one stream.

    Returns (final_states (K, d), pooled_tail ((keep_last*K, d) or None),
    oracle_calls). Used where thousands of cheap chains matter more than
    per-chain replay.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    oracle = StochasticOracle(potential=target, noise=noise, feedback=feedback, rng=rng)
    d = target.dim
    X = np.tile(np.zeros(d) if x_init is None else np.asarray(x_init, dtype=float), (n_chains, 1))
    tail = []
    for step in range(1, n_steps + 1):
        u = rng.standard_normal((n_chains * b, d))
        shifted = X.repeat(b, axis=0) + nu * u
        f_shift, f_base = oracle.query_pair_batch(shifted, X.repeat(b, axis=0))
        diffs = ((f_shift - f_base) / nu)[:, None] * u
        g = diffs.reshape(n_chains, b, d).mean(axis=1)
        X = X - h * g + math.sqrt(2 * h) * rng.standard_normal((n_chains, d))
        if not np.all(np.isfinite(X)):
            raise ChainDivergenceError("zo-lmc", step)
        if keep_last and step > n_steps - keep_last:
            tail.append(X.copy())
    pooled = np.concatenate(tail, axis=0) if tail else None
    return X, pooled, oracle.calls


def run_lmc_baseline_ensemble(
    target: Potential,
    h: float,
    n_steps: int,
    n_chains: int,
    seed: int,
    x_init_std: float = 1.0,
    keep_last: int = 1,
):
    """Vectorized exact-gradient overdamped ensemble for reference sampling.

    Chains start from N(0, x_init_std^2 I); the last ``keep_last`` states of
    every chain are pooled into the returned cloud.
    """
    if not target.has_grad:
        raise ValueError("baseline ensemble needs an exact gradient")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    d = target.dim
    X = x_init_std * rng.standard_normal((n_chains, d))
    tail = []
    for step in range(1, n_steps + 1):
        X = X - h * target.grad(X) + math.sqrt(2 * h) * rng.standard_normal((n_chains, d))
        if not np.all(np.isfinite(X)):
            raise ChainDivergenceError("lmc-baseline", step)
        if step > n_steps - keep_last:
            tail.append(X.copy())
    return np.concatenate(tail, axis=0)
