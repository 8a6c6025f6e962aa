"""Sampling from densities pi ~ exp(-f) using only noisy evaluations of f."""

from .estimator import (
    GradientEstimate,
    SmoothingConfig,
    diagnose_estimator,
    estimate_gradient,
    mc_bias,
    mc_variance,
    one_point_variance_bound,
    smoothing_bias_bound,
    two_point_variance_bound,
)
from .metrics import (
    brownian_cov_oracle,
    final_states,
    pooled_states,
    sliced_w2,
    w2_1d_exact,
    w2_gaussian_bures,
)
from .oracle import (
    ONE_POINT,
    TWO_POINT,
    AdditiveGaussian,
    GeneralLipschitz,
    Multiplicative,
    Noiseless,
    NoiseModel,
    StochasticOracle,
)
from .samplers import (
    Chain,
    ChainDivergenceError,
    KineticState,
    OverdampedState,
    RmpState,
    klmc_noise_cov,
    psi,
    rmp_noise_cov,
    run_lmc_baseline_ensemble,
    run_sampler,
    run_zo_lmc_ensemble,
    warm_start_zo_sgd,
    zo_klmc_step,
    zo_lmc_step,
    zo_rmp_step,
)
from .select import (
    SparsityModel,
    embed,
    estimate_support,
    required_samples,
    restrict_and_sample,
    restrict_potential,
    selection_threshold,
)
from .targets import (
    Potential,
    check_potential,
    load_logistic_csv,
    make_gaussian_target,
    make_logistic_target,
    make_mixture_target,
    make_sparse_quadratic_target,
)
from .tuning import (
    LSI,
    STRONGLY_LOGCONCAVE,
    TunedParams,
    default_w2_init,
    tune_onepoint,
    tune_zoklmc,
    tune_zolmc,
    tune_zolmc_lsi,
    tune_zormp,
    with_overrides,
)

__version__ = "0.1.0"
