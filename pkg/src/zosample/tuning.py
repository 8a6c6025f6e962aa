"""Maps a target accuracy to sampler parameters (h, b, nu, gamma, N).

One tuner per algorithm/regime. Each returns the published parameter choices
for reaching 2-Wasserstein accuracy epsilon, with the iteration count resolved
from the corresponding geometric contraction so that the initial-condition
term falls below epsilon/2 (epsilon^2/2 in KL for the log-Sobolev regime):

    zo-lmc     contraction (1 - m h / 2)^N       on W2
    zo-klmc    contraction (1 - m h / (8 gamma))^N on the coupled norm
    zo-rmp     contraction exp(-N h / (2 kappa)),  N = (2 kappa / h) log(20/eps^2)
    zo-lmc/LSI contraction exp(-N lambda h)       on KL

``predicted_oracle_calls`` is exact arithmetic, checked against runtime
counters by the test suite. One-point feedback keeps (h, nu, gamma) and
inflates only the probe batch size b.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

STRONGLY_LOGCONCAVE = "strongly-logconcave"
LSI = "lsi"
TWO_POINT = "two-point"
ONE_POINT = "one-point"

_CALLS_PER_STEP = {
    "zo-lmc": 2,
    "zo-klmc": 2,
    "zo-rmp": 4,  # two gradient estimates per step
    "lmc-baseline": 0,
    "klmc-baseline": 0,
}


def calls_per_step(algorithm: str, b: int) -> int:
    """Zeroth-order oracle calls one step consumes: (pair queries per step) * 2b."""
    try:
        return _CALLS_PER_STEP[algorithm] * b if _CALLS_PER_STEP[algorithm] else 0
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}") from None


@dataclass(frozen=True)
class TunedParams:
    """Complete parameter set for one sampler run."""

    algorithm: str
    concavity: str  # strongly-logconcave | lsi
    feedback: str  # two-point | one-point
    epsilon: float
    h: float
    b: int
    b_raw: float  # pre-ceiling batch size, kept for exact ratio checks
    nu: float
    n_steps: int
    gamma: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.h <= 0 or self.nu <= 0:
            raise ValueError("h and nu must be positive")
        if self.b < 1:
            raise ValueError("b must be >= 1")
        if self.n_steps < 0:
            raise ValueError("n_steps must be nonnegative")

    @property
    def predicted_oracle_calls(self) -> int:
        return self.n_steps * calls_per_step(self.algorithm, self.b)

    def as_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "concavity": self.concavity,
            "feedback": self.feedback,
            "epsilon": self.epsilon,
            "h": self.h,
            "b": self.b,
            "b_raw": self.b_raw,
            "nu": self.nu,
            "gamma": self.gamma,
            "n_steps": self.n_steps,
            "predicted_oracle_calls": self.predicted_oracle_calls,
            "meta": self.meta,
        }


def with_overrides(params: TunedParams, **overrides) -> TunedParams:
    """Replace single parameters (h, b, nu, gamma, n_steps) after tuning."""
    allowed = {"h", "b", "nu", "gamma", "n_steps"}
    unknown = set(overrides) - allowed
    if unknown:
        raise ValueError(f"cannot override {sorted(unknown)}; allowed: {sorted(allowed)}")
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if "b" in overrides:
        overrides["b_raw"] = float(overrides["b"])
    meta = dict(params.meta)
    if overrides:
        meta["overridden"] = sorted(set(overrides) - {"b_raw"})
    return replace(params, meta=meta, **overrides)


def _ceil_steps(steps_per_log: float, log_factor: float) -> int:
    return max(1, math.ceil(steps_per_log * max(log_factor, 0.0)))


def tune_zolmc(epsilon, d, sigma, m, M, w2_init) -> TunedParams:
    """Two-point overdamped tuning: h = eps^2/d^2, b = max(1, sigma^2) d, nu = eps/sqrt(d)."""
    if m <= 0:
        raise ValueError("strongly log-concave tuning needs m > 0")
    eps_max_h = d * math.sqrt(2.0 / (M + m))
    eps_max_var = math.sqrt(m * (d + 5) / (8.0 * M**2))
    if not 0 < epsilon <= min(eps_max_h, eps_max_var):
        raise ValueError(
            f"epsilon={epsilon:g} outside the admissible range: needs epsilon <= "
            f"min(d sqrt(2/(M+m)) = {eps_max_h:g}, sqrt(m(d+5)/(8 M^2)) = {eps_max_var:g})"
        )
    h = epsilon**2 / d**2
    assert h <= 2.0 / (m + M)
    b_raw = max(1.0, sigma**2) * d
    steps_per_log = 2.0 / (m * h)
    log_factor = math.log(2.0 * w2_init / epsilon) if w2_init > 0 else 0.0
    return TunedParams(
        algorithm="zo-lmc",
        concavity=STRONGLY_LOGCONCAVE,
        feedback=TWO_POINT,
        epsilon=epsilon,
        h=h,
        b=max(1, math.ceil(b_raw)),
        b_raw=b_raw,
        nu=epsilon / math.sqrt(d),
        n_steps=_ceil_steps(steps_per_log, log_factor),
        meta={"steps_per_log": steps_per_log, "log_factor": log_factor, "w2_init": w2_init},
    )


def tune_zoklmc(epsilon, d, sigma, m, M, w2_init) -> TunedParams:
    """Two-point kinetic tuning with gamma = sqrt(m + M)."""
    if m <= 0:
        raise ValueError("strongly log-concave tuning needs m > 0")
    gamma = math.sqrt(m + M)
    eps_max = 12.0 * M * gamma**2 * math.sqrt(d) / m**2
    if not 0 < epsilon <= eps_max:
        raise ValueError(
            f"epsilon={epsilon:g} outside the admissible range (needs <= "
            f"12 M gamma^2 sqrt(d)/m^2 = {eps_max:g})"
        )
    h = m * epsilon / (12.0 * gamma * M * math.sqrt(d))
    b_raw = d**1.5 * max(1.0, sigma**2) / epsilon
    steps_per_log = 8.0 * gamma / (m * h)
    # coupled-norm-to-W2 prefactor: W2_n <= sqrt(2) sqrt(1+gamma^2)/gamma * (...)^n W2_0
    prefactor = 2.0 * math.sqrt(2.0) * math.sqrt(1.0 + gamma**2) / gamma
    log_factor = math.log(prefactor * w2_init / epsilon) if w2_init > 0 else 0.0
    return TunedParams(
        algorithm="zo-klmc",
        concavity=STRONGLY_LOGCONCAVE,
        feedback=TWO_POINT,
        epsilon=epsilon,
        h=h,
        b=max(1, math.ceil(b_raw)),
        b_raw=b_raw,
        nu=epsilon / math.sqrt(d),
        gamma=gamma,
        n_steps=_ceil_steps(steps_per_log, log_factor),
        meta={"steps_per_log": steps_per_log, "log_factor": log_factor, "w2_init": w2_init},
    )


def tune_zormp(epsilon, d, sigma, m, M, C: float = 1.0) -> TunedParams:
    """Two-point randomized-midpoint tuning with u = 1/M and step constant C.

    The published step-size formula carries log(1/eps) factors that vanish at
    eps = 1; they are guarded as max(1, log(1/eps)) so the boundary of the
    admissible range 0 < eps <= 1 stays usable.
    """
    if m <= 0:
        raise ValueError("strongly log-concave tuning needs m > 0")
    if not 0 < epsilon <= 1:
        raise ValueError("randomized-midpoint tuning needs 0 < epsilon <= 1")
    if C <= 0:
        raise ValueError("step constant C must be positive")
    kappa = M / m
    log_inv_eps = max(1.0, math.log(1.0 / epsilon))
    branch_first = (epsilon * math.sqrt(m)) ** (1.0 / 3.0) / (
        (d * kappa) ** (1.0 / 6.0) * log_inv_eps ** (1.0 / 6.0)
    )
    noise_limit = (M * m / (16.0 * sigma**2)) ** (1.0 / 3.0) if sigma > 0 else math.inf
    branch_second = (
        min((m / d) ** (1.0 / 3.0), noise_limit, math.sqrt(m))
        * epsilon ** (2.0 / 3.0)
        * log_inv_eps ** (-2.0 / 3.0)
    )
    h = C * min(branch_first, branch_second)
    b_raw = d * kappa / h**3
    steps_per_log = 2.0 * kappa / h
    log_factor = math.log(20.0 / epsilon**2)
    return TunedParams(
        algorithm="zo-rmp",
        concavity=STRONGLY_LOGCONCAVE,
        feedback=TWO_POINT,
        epsilon=epsilon,
        h=h,
        b=max(1, math.ceil(b_raw)),
        b_raw=b_raw,
        nu=(1.0 / M) * h**2 / d**1.5,
        n_steps=_ceil_steps(steps_per_log, log_factor),
        meta={
            "steps_per_log": steps_per_log,
            "log_factor": log_factor,
            "u_rmp": 1.0 / M,
            "step_constant": C,
            "active_branch": "first" if branch_first <= branch_second else "second",
        },
    )


def tune_zolmc_lsi(epsilon, d, sigma, M, lam, kl_init) -> TunedParams:
    """Overdamped tuning under a log-Sobolev constant lambda (no strong convexity).

    The published accuracy range reads eps <= alpha/(4 L^2) with alpha and L
    never bound in context; the natural reading lambda/(4 M^2) is used and
    flagged in the metadata.
    """
    if lam <= 0:
        raise ValueError("log-Sobolev tuning needs lambda > 0")
    eps_max = lam / (4.0 * M**2)
    if not 0 < epsilon <= eps_max:
        raise ValueError(
            f"epsilon={epsilon:g} outside the admissible range (needs <= "
            f"lambda/(4 M^2) = {eps_max:g})"
        )
    h = epsilon**2 / d
    b_raw = 384.0 * M**2 * (d + 5) * max(1.0, sigma**2) / (h * lam**2)
    steps_per_log = 1.0 / (lam * h)
    log_factor = math.log(kl_init / epsilon**2) if kl_init > 0 else 0.0
    return TunedParams(
        algorithm="zo-lmc",
        concavity=LSI,
        feedback=TWO_POINT,
        epsilon=epsilon,
        h=h,
        b=max(1, math.ceil(b_raw)),
        b_raw=b_raw,
        nu=math.sqrt(h) / (d + 3),
        n_steps=_ceil_steps(steps_per_log, log_factor),
        meta={
            "steps_per_log": steps_per_log,
            "log_factor": log_factor,
            "kl_init": kl_init,
            "epsilon_range_substitution": "alpha->lambda, L->M",
        },
    )


_ONEPOINT_REGIMES = ("zo-lmc", "zo-klmc", "zo-rmp", "zo-lmc-lsi")


def tune_onepoint(
    regime: str,
    epsilon,
    d,
    sigma,
    m=None,
    M=None,
    lam=None,
    w2_init=None,
    kl_init=None,
    C: float = 1.0,
) -> TunedParams:
    """One-point (independent noise per evaluation) variant of any tuner.

    Keeps the two-point h, nu and gamma and inflates the batch size:
    1/eps^2 for the overdamped and kinetic samplers, d^3/h^4 for the
    randomized midpoint, 1/h in the log-Sobolev regime.
    """
    if regime == "zo-lmc":
        base = tune_zolmc(epsilon, d, sigma, m, M, w2_init)
        inflation = 1.0 / epsilon**2
    elif regime == "zo-klmc":
        base = tune_zoklmc(epsilon, d, sigma, m, M, w2_init)
        inflation = 1.0 / epsilon**2
    elif regime == "zo-rmp":
        base = tune_zormp(epsilon, d, sigma, m, M, C)
        inflation = d**3 / base.h**4
    elif regime == "zo-lmc-lsi":
        base = tune_zolmc_lsi(epsilon, d, sigma, M, lam, kl_init)
        inflation = 1.0 / base.h
    else:
        raise ValueError(f"unknown one-point regime {regime!r}; choose from {_ONEPOINT_REGIMES}")
    b_raw = base.b_raw * inflation
    meta = dict(base.meta)
    meta["onepoint_b_inflation"] = inflation
    return replace(
        base,
        feedback=ONE_POINT,
        b=max(1, math.ceil(b_raw)),
        b_raw=b_raw,
        meta=meta,
    )


def default_w2_init(x_init, target) -> float:
    """Crude initial-distance bound ||x0 - x*|| + sqrt(d/m) for known minimizers."""
    import numpy as np

    if target.minimizer is None or target.m <= 0:
        raise ValueError("w2_init must be supplied when x* or m is unknown")
    gap = float(np.linalg.norm(np.asarray(x_init, dtype=float) - target.minimizer))
    return gap + math.sqrt(target.dim / target.m)
