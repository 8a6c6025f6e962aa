"""Config-driven experiment runner.

Subcommands:

    sample <config.json> [--check]    run a configured sampling experiment
    tune ...                          print tuned parameters as JSON
    select ...                        gradient-free support selection
    verify-cov ...                    analytic vs Monte-Carlo noise covariance
    benchmark <config.json>           tuner/sampler scaling sweep
    diagnose-estimator ...            estimator bias/variance CSV diagnostics

Configs are strict JSON: unknown fields are rejected. Every run directory
contains a manifest embedding the full config and its hash, so rerunning the
manifest reproduces the traces byte for byte. Exit codes: 0 ok, 2 config
error, 3 divergence, 4 threshold failure in --check mode.

``ZOSAMPLE_WORKERS`` sets the default number of chain workers.
"""

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .estimator import SmoothingConfig, diagnose_estimator
from .metrics import brownian_cov_oracle, final_states, w2_gaussian_bures
from .oracle import (
    FEEDBACK_MODES,
    AdditiveGaussian,
    Noiseless,
    StochasticOracle,
    noise_from_config,
)
from .samplers import (
    ALGORITHMS,
    ChainDivergenceError,
    klmc_noise_cov,
    rmp_noise_cov,
    run_sampler,
    run_single_chain,
)
from .select import estimate_support, required_samples, selection_threshold
from .targets import (
    load_logistic_csv,
    make_gaussian_target,
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

SCHEMA_VERSION = 1
CONCAVITY_MODES = (STRONGLY_LOGCONCAVE, LSI)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config parsing (fail-closed)


def _require_keys(mapping, allowed, required, where):
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown fields in {where}: {sorted(unknown)}")
    missing = set(required) - set(mapping)
    if missing:
        raise ConfigError(f"missing fields in {where}: {sorted(missing)}")


def target_from_config(spec):
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "gaussian":
        _require_keys(spec, {"mean", "precision"}, {"mean", "precision"}, "target")
        return make_gaussian_target(spec["mean"], spec["precision"])
    if kind == "mixture":
        _require_keys(
            spec,
            {"weights", "means", "covariances", "lsi_constant"},
            {"weights", "means", "covariances"},
            "target",
        )
        return make_mixture_target(
            spec["weights"], spec["means"], spec["covariances"], spec.get("lsi_constant")
        )
    if kind == "logistic":
        _require_keys(spec, {"csv", "ridge"}, {"csv", "ridge"}, "target")
        return load_logistic_csv(spec["csv"], float(spec["ridge"]))
    if kind == "sparse-quadratic":
        _require_keys(spec, {"dim", "support", "coeffs"}, {"dim", "support"}, "target")
        return make_sparse_quadratic_target(
            int(spec["dim"]), spec["support"], spec.get("coeffs")
        )
    raise ConfigError(f"unknown target kind {kind!r}")


_CONFIG_KEYS = {
    "schema_version",
    "target",
    "noise",
    "algorithm",
    "regime",
    "epsilon",
    "w2_init",
    "kl_init",
    "tuner_sigma",
    "overrides",
    "n_chains",
    "seed",
    "thin",
    "x_init",
    "output_dir",
    "max_oracle_calls",
    "check",
}
_OVERRIDE_KEYS = {"h", "b", "nu", "gamma", "n_steps", "step_constant", "k1", "k2"}


def parse_experiment_config(raw: dict) -> dict:
    """Validate a raw config mapping; returns it normalized (fail-closed)."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if "config" in raw:  # manifest wrapper: rerun from its embedded config
        raw = raw["config"]
    _require_keys(
        raw, _CONFIG_KEYS, {"schema_version", "target", "algorithm", "seed", "n_chains"}, "config"
    )
    if raw["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {raw['schema_version']} (expected {SCHEMA_VERSION})"
        )
    if raw["algorithm"] not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {raw['algorithm']!r}; choose from {ALGORITHMS}")
    regime = dict(raw.get("regime", {}))
    _require_keys(regime, {"concavity", "feedback"}, set(), "regime")
    concavity = regime.get("concavity", STRONGLY_LOGCONCAVE)
    feedback = regime.get("feedback", "two-point")
    if concavity not in CONCAVITY_MODES:
        raise ConfigError(f"regime.concavity must be one of {CONCAVITY_MODES}")
    if feedback not in FEEDBACK_MODES:
        raise ConfigError(f"regime.feedback must be one of {FEEDBACK_MODES}")
    if concavity == LSI and raw["algorithm"] != "zo-lmc":
        raise ConfigError(
            f"algorithm {raw['algorithm']!r} is not supported in the lsi regime "
            "(only zo-lmc has a log-Sobolev tuning)"
        )
    overrides = dict(raw.get("overrides", {}))
    _require_keys(overrides, _OVERRIDE_KEYS, set(), "overrides")
    if int(raw["n_chains"]) < 1:
        raise ConfigError("n_chains must be >= 1")
    out = dict(raw)
    out["regime"] = {"concavity": concavity, "feedback": feedback}
    out["overrides"] = overrides
    return out


def tuned_params_from_config(config: dict, target) -> TunedParams:
    algorithm = config["algorithm"]
    concavity = config["regime"]["concavity"]
    feedback = config["regime"]["feedback"]
    overrides = config["overrides"]
    x_init = np.asarray(config.get("x_init", np.zeros(target.dim)), dtype=float)

    if algorithm.endswith("baseline"):
        if "h" not in overrides or "n_steps" not in overrides:
            raise ConfigError("baseline algorithms need explicit overrides.h and overrides.n_steps")
        gamma = overrides.get("gamma")
        if algorithm == "klmc-baseline" and gamma is None:
            gamma = float(np.sqrt(target.m + target.M))
        return TunedParams(
            algorithm=algorithm,
            concavity=concavity,
            feedback=feedback,
            epsilon=float(config.get("epsilon", 0.0) or 0.0),
            h=float(overrides["h"]),
            b=1,
            b_raw=1.0,
            nu=1.0,  # unused by exact-gradient baselines
            gamma=gamma,
            n_steps=int(overrides["n_steps"]),
            meta={"baseline": True},
        )

    if "epsilon" not in config:
        raise ConfigError("zeroth-order algorithms need an epsilon")
    epsilon = float(config["epsilon"])
    sigma = config.get("tuner_sigma")
    if sigma is None:
        sigma = noise_from_config(config.get("noise", {"kind": "noiseless"})).value_sigma()
    sigma = float(sigma)
    C = float(overrides.get("step_constant", 1.0))

    try:
        if concavity == LSI:
            lam = target.lsi_constant
            if lam is None:
                raise ConfigError("lsi regime needs target.lsi_constant")
            kl_init = float(config.get("kl_init", target.dim))
            if feedback == "one-point":
                params = tune_onepoint(
                    "zo-lmc-lsi", epsilon, target.dim, sigma, M=target.M, lam=lam, kl_init=kl_init
                )
            else:
                params = tune_zolmc_lsi(epsilon, target.dim, sigma, target.M, lam, kl_init)
        else:
            w2_init = config.get("w2_init")
            if w2_init is None and algorithm != "zo-rmp":
                w2_init = default_w2_init(x_init, target)
            if feedback == "one-point":
                regime_key = {"zo-lmc": "zo-lmc", "zo-klmc": "zo-klmc", "zo-rmp": "zo-rmp"}[
                    algorithm
                ]
                params = tune_onepoint(
                    regime_key, epsilon, target.dim, sigma, m=target.m, M=target.M,
                    w2_init=w2_init, C=C,
                )
            elif algorithm == "zo-lmc":
                params = tune_zolmc(epsilon, target.dim, sigma, target.m, target.M, w2_init)
            elif algorithm == "zo-klmc":
                params = tune_zoklmc(epsilon, target.dim, sigma, target.m, target.M, w2_init)
            elif algorithm == "zo-rmp":
                params = tune_zormp(epsilon, target.dim, sigma, target.m, target.M, C)
            else:
                raise ConfigError(f"no tuner for algorithm {algorithm!r}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    plain = {k: overrides[k] for k in ("h", "b", "nu", "gamma", "n_steps") if k in overrides}
    if plain:
        params = with_overrides(params, **plain)
    return params


# ---------------------------------------------------------------------------
# experiment runner


def _float_repr(x: float) -> str:
    return repr(float(x))


def _write_traces(path, chains):
    d = chains[0].states.shape[1]
    header = "chain,step," + ",".join(f"x{j + 1}" for j in range(d))
    lines = [header]
    for c in chains:
        for step, state in zip(c.steps, c.states):
            lines.append(
                f"{c.chain_index},{int(step)}," + ",".join(_float_repr(v) for v in state)
            )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def run_experiment(config, out_dir=None, check: bool = False) -> int:
    """Run a sampling experiment from a config mapping or JSON path.

    Writes trace.csv, params.json, summary.json and manifest.json into the
    output directory. Returns the process exit code.
    """
    if isinstance(config, (str, os.PathLike)):
        with open(config) as fh:
            config = json.load(fh)
    config = parse_experiment_config(config)
    out_dir = out_dir or config.get("output_dir")
    if out_dir is None:
        raise ConfigError("an output directory is required (output_dir or --out)")
    os.makedirs(out_dir, exist_ok=True)

    target = target_from_config(config["target"])
    noise = noise_from_config(config.get("noise", {"kind": "noiseless"}))
    params = tuned_params_from_config(config, target)
    n_chains = int(config["n_chains"])

    cap = config.get("max_oracle_calls")
    total_predicted = params.predicted_oracle_calls * n_chains
    if cap is not None and total_predicted > int(cap):
        raise ConfigError(
            f"predicted oracle budget {total_predicted} exceeds max_oracle_calls={cap}"
        )

    x_init = config.get("x_init")
    if x_init is not None:
        x_init = np.asarray(x_init, dtype=float)

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "config": config,
        "config_sha256": hashlib.sha256(
            json.dumps(config, sort_keys=True).encode()
        ).hexdigest(),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)

    started = time.time()
    status = 0
    error = None
    chains = []
    workers = int(os.environ.get("ZOSAMPLE_WORKERS", "1"))
    try:
        if workers > 1:
            chains = run_sampler(
                config["algorithm"], target, noise, params,
                n_chains=n_chains, seed=int(config["seed"]),
                thin=config.get("thin"), x_init=x_init, workers=workers,
            )
        else:
            for index in range(n_chains):  # chain at a time: keep traces on divergence
                chains.append(
                    run_single_chain(
                        config["algorithm"], target, noise, params,
                        seed=int(config["seed"]), index=index,
                        thin=config.get("thin"), x_init=x_init,
                    )
                )
    except ChainDivergenceError as exc:
        status, error = 3, str(exc)
    wall = time.time() - started

    if chains:
        _write_traces(os.path.join(out_dir, "trace.csv"), chains)
    sidecar = {
        "params": params.as_dict(),
        "seed": int(config["seed"]),
        "n_chains": n_chains,
        "oracle_calls_per_chain": [c.oracle_calls for c in chains],
        "warmup_calls_per_chain": [c.warmup_calls for c in chains],
    }
    with open(os.path.join(out_dir, "params.json"), "w") as fh:
        json.dump(sidecar, fh, indent=2)

    summary = {
        "algorithm": config["algorithm"],
        "status": "diverged" if status else "ok",
        "error": error,
        "wall_seconds": wall,
        "predicted_oracle_calls": total_predicted,
        "counted_oracle_calls": int(sum(c.oracle_calls for c in chains)),
        "warmup_oracle_calls": int(sum(c.warmup_calls for c in chains)),
    }
    if status == 0 and target.true_mean is not None and n_chains > target.dim:
        cloud = final_states(chains)
        summary["bures_w2_final"] = w2_gaussian_bures(cloud, target.true_mean, target.true_cov)
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)

    if status:
        return status
    if check:
        threshold = (config.get("check") or {}).get("bures_w2_max")
        if threshold is not None:
            got = summary.get("bures_w2_final")
            if got is None or got > float(threshold):
                print(
                    f"check failed: bures_w2_final={got} > {threshold}",
                    file=sys.stderr,
                )
                return 4
    return 0


# ---------------------------------------------------------------------------
# benchmark sweep


_BENCH_KEYS = {
    "schema_version",
    "algorithm",
    "target_dims",
    "epsilons",
    "sigma",
    "w2_init",
    "n_chains",
    "seed",
    "empirical",
    "output_dir",
}


def benchmark_sweep(config, out_dir=None) -> int:
    """Tune (and optionally run) over a (dim, epsilon) grid; write scaling.csv.

    The empirical column records the first recorded step at which the pooled
    cross-chain snapshot reaches Bures-W2 <= epsilon on a standard-Gaussian
    target. Fitted log-log slopes of the contraction-normalized step counts
    are written to slopes.json.
    """
    if isinstance(config, (str, os.PathLike)):
        with open(config) as fh:
            config = json.load(fh)
    _require_keys(config, _BENCH_KEYS, {"schema_version", "algorithm", "epsilons"}, "benchmark")
    if config["schema_version"] != SCHEMA_VERSION:
        raise ConfigError("unsupported schema_version")
    algorithm = config["algorithm"]
    if algorithm not in ("zo-lmc", "zo-klmc", "zo-rmp"):
        raise ConfigError("benchmark supports the zeroth-order algorithms only")
    dims = [int(d) for d in config.get("target_dims", [2])]
    epsilons = [float(e) for e in config["epsilons"]]
    if not dims or not epsilons:
        raise ConfigError("benchmark grid must be nonempty")
    sigma = float(config.get("sigma", 0.0))
    n_chains = int(config.get("n_chains", 64))
    seed = int(config.get("seed", 0))
    empirical = bool(config.get("empirical", False))
    out_dir = out_dir or config.get("output_dir")
    if out_dir is None:
        raise ConfigError("an output directory is required (output_dir or --out)")
    os.makedirs(out_dir, exist_ok=True)

    rows = []
    for d in dims:
        target = make_gaussian_target(np.zeros(d), np.eye(d))
        w2_init = float(config.get("w2_init") or default_w2_init(np.zeros(d), target))
        for eps in epsilons:
            if algorithm == "zo-lmc":
                params = tune_zolmc(eps, d, sigma, target.m, target.M, w2_init)
            elif algorithm == "zo-klmc":
                params = tune_zoklmc(eps, d, sigma, target.m, target.M, w2_init)
            else:
                params = tune_zormp(eps, d, sigma, target.m, target.M)
            row = {
                "dim": d,
                "epsilon": eps,
                "h": params.h,
                "b": params.b,
                "nu": params.nu,
                "n_steps": params.n_steps,
                "predicted_oracle_calls": params.predicted_oracle_calls,
                "norm_steps": params.n_steps / max(params.meta["log_factor"], 1e-12),
                "steps_to_threshold": "",
            }
            if empirical:
                noise = AdditiveGaussian(sigma) if sigma > 0 else Noiseless()
                try:
                    chains = run_sampler(
                        algorithm, target, noise, params, n_chains=n_chains, seed=seed
                    )
                    row["steps_to_threshold"] = _steps_to_threshold(chains, target, eps)
                except ChainDivergenceError as exc:
                    row["steps_to_threshold"] = f"diverged@{exc.step}"
            rows.append(row)

    cols = list(rows[0].keys())
    with open(os.path.join(out_dir, "scaling.csv"), "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in cols) + "\n")

    slopes = {}
    for d in dims:
        sub = [r for r in rows if r["dim"] == d]
        if len(sub) >= 2:
            x = np.log([1.0 / r["epsilon"] ** 2 for r in sub])
            if algorithm == "zo-klmc":
                x = np.log([1.0 / r["epsilon"] for r in sub])
            y = np.log([r["norm_steps"] for r in sub])
            slopes[f"dim={d}"] = float(np.polyfit(x, y, 1)[0])
    with open(os.path.join(out_dir, "slopes.json"), "w") as fh:
        json.dump(slopes, fh, indent=2)
    print(json.dumps(slopes))
    return 0


def _steps_to_threshold(chains, target, eps):
    steps = chains[0].steps
    for idx, step in enumerate(steps):
        cloud = np.stack([c.states[idx] for c in chains])
        if cloud.shape[0] <= target.dim:
            continue
        if w2_gaussian_bures(cloud, target.true_mean, target.true_cov) <= eps:
            return int(step)
    return "none"


# ---------------------------------------------------------------------------
# argparse front end


def _add_target_arg(p):
    p.add_argument(
        "--target",
        required=True,
        help="path to a JSON target spec, e.g. {\"kind\": \"gaussian\", ...}",
    )


def _load_json_arg(path_or_literal):
    if os.path.exists(path_or_literal):
        with open(path_or_literal) as fh:
            return json.load(fh)
    return json.loads(path_or_literal)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="zosample", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sample = sub.add_parser("sample", help="run a sampling experiment from a config")
    p_sample.add_argument("config")
    p_sample.add_argument("--out", help="output directory (overrides config.output_dir)")
    p_sample.add_argument(
        "--check", action="store_true", help="exit 4 when the configured check fails"
    )

    p_tune = sub.add_parser("tune", help="print tuned parameters as JSON")
    p_tune.add_argument("--algorithm", required=True, choices=["zo-lmc", "zo-klmc", "zo-rmp"])
    p_tune.add_argument("--epsilon", type=float, required=True)
    p_tune.add_argument("--dim", type=int, required=True)
    p_tune.add_argument("--sigma", type=float, default=0.0)
    p_tune.add_argument("--m", type=float, help="strong convexity constant")
    p_tune.add_argument("--M", type=float, required=True, help="gradient Lipschitz constant")
    p_tune.add_argument("--lsi-constant", type=float, help="log-Sobolev constant (lsi regime)")
    p_tune.add_argument("--concavity", choices=list(CONCAVITY_MODES), default=STRONGLY_LOGCONCAVE)
    p_tune.add_argument("--feedback", choices=list(FEEDBACK_MODES), default="two-point")
    p_tune.add_argument("--w2-init", type=float, default=1.0)
    p_tune.add_argument("--kl-init", type=float, default=1.0)
    p_tune.add_argument("--step-constant", type=float, default=1.0)
    for name in ("h", "b", "nu", "gamma", "n-steps"):
        p_tune.add_argument(f"--override-{name}", type=float)

    p_select = sub.add_parser("select", help="estimate the active coordinate support")
    _add_target_arg(p_select)
    p_select.add_argument("--theta0", required=True, help="query point: JSON list or path")
    p_select.add_argument("--a", type=float, help="minimal on-support signal strength")
    p_select.add_argument("--s", type=int, help="sparsity level")
    p_select.add_argument("--r", type=float, help="gradient-norm bound at the query point")
    p_select.add_argument("--err", type=float, default=0.05)
    p_select.add_argument("--k1", type=float, default=1.0)
    p_select.add_argument("--k2", type=float, default=1.0)
    p_select.add_argument("--n", type=int, help="explicit probe count (skips the n formula)")
    p_select.add_argument("--nu", type=float, help="smoothing radius (default: theorem bound)")
    p_select.add_argument("--tau", type=float, help="threshold (default: from a, M, nu, s)")
    p_select.add_argument("--noise-sigma", type=float, default=0.0)
    p_select.add_argument("--seed", type=int, default=0)

    p_vc = sub.add_parser("verify-cov", help="compare analytic and Monte-Carlo noise covariance")
    p_vc.add_argument("--family", required=True, choices=["klmc", "rmp"])
    p_vc.add_argument("--gamma", type=float, help="friction (klmc)")
    p_vc.add_argument("--h", type=float, required=True)
    p_vc.add_argument("--alpha", type=float, help="midpoint fraction (rmp)")
    p_vc.add_argument("--u", type=float, default=1.0, help="inverse smoothness (rmp)")
    p_vc.add_argument("--paths", type=int, default=200_000)
    p_vc.add_argument("--substeps", type=int, default=1000)
    p_vc.add_argument("--seed", type=int, default=0)
    p_vc.add_argument("--tol", type=float, help="exit 4 when max relative error exceeds this")

    p_bench = sub.add_parser("benchmark", help="tuner/sampler scaling sweep")
    p_bench.add_argument("config")
    p_bench.add_argument("--out")

    p_diag = sub.add_parser("diagnose-estimator", help="estimator bias/variance CSV diagnostics")
    _add_target_arg(p_diag)
    p_diag.add_argument("--theta", action="append", required=True, help="query point (repeatable)")
    p_diag.add_argument("--nu", type=float, action="append", required=True)
    p_diag.add_argument("--b", type=int, action="append", required=True)
    p_diag.add_argument("--mode", choices=list(FEEDBACK_MODES), default="two-point")
    p_diag.add_argument("--sigma", type=float, default=0.0)
    p_diag.add_argument("--reps", type=int, default=2000)
    p_diag.add_argument("--seed", type=int, default=0)
    p_diag.add_argument("--out", help="write CSV here instead of stdout")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ChainDivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 3


def _dispatch(args) -> int:
    if args.command == "sample":
        return run_experiment(args.config, out_dir=args.out, check=args.check)
    if args.command == "tune":
        return _cmd_tune(args)
    if args.command == "select":
        return _cmd_select(args)
    if args.command == "verify-cov":
        return _cmd_verify_cov(args)
    if args.command == "benchmark":
        return benchmark_sweep(args.config, out_dir=args.out)
    if args.command == "diagnose-estimator":
        return _cmd_diagnose(args)
    raise ConfigError(f"unknown command {args.command}")


def _cmd_tune(args) -> int:
    overrides = {}
    for name in ("h", "b", "nu", "gamma", "n_steps"):
        val = getattr(args, f"override_{name}")
        if val is not None:
            overrides[name] = int(val) if name in ("b", "n_steps") else val
    if args.concavity == LSI:
        if args.algorithm != "zo-lmc":
            raise ConfigError("only zo-lmc supports the lsi regime")
        if args.lsi_constant is None:
            raise ConfigError("--lsi-constant is required in the lsi regime")
        if args.feedback == "one-point":
            params = tune_onepoint(
                "zo-lmc-lsi", args.epsilon, args.dim, args.sigma,
                M=args.M, lam=args.lsi_constant, kl_init=args.kl_init,
            )
        else:
            params = tune_zolmc_lsi(
                args.epsilon, args.dim, args.sigma, args.M, args.lsi_constant, args.kl_init
            )
    else:
        if args.m is None:
            raise ConfigError("--m is required in the strongly-logconcave regime")
        if args.feedback == "one-point":
            params = tune_onepoint(
                args.algorithm, args.epsilon, args.dim, args.sigma,
                m=args.m, M=args.M, w2_init=args.w2_init, C=args.step_constant,
            )
        elif args.algorithm == "zo-lmc":
            params = tune_zolmc(args.epsilon, args.dim, args.sigma, args.m, args.M, args.w2_init)
        elif args.algorithm == "zo-klmc":
            params = tune_zoklmc(args.epsilon, args.dim, args.sigma, args.m, args.M, args.w2_init)
        else:
            params = tune_zormp(
                args.epsilon, args.dim, args.sigma, args.m, args.M, args.step_constant
            )
    if overrides:
        params = with_overrides(params, **overrides)
    print(json.dumps(params.as_dict(), indent=2))
    return 0


def _cmd_select(args) -> int:
    target = target_from_config(_load_json_arg(args.target))
    theta0 = np.asarray(_load_json_arg(args.theta0), dtype=float)
    if args.n is None and (args.a is None or args.s is None or args.r is None):
        raise ConfigError("select needs either --n or all of --a, --s, --r")
    if args.nu is None or args.tau is None:
        if args.a is None or args.s is None:
            raise ConfigError("defaults for --nu/--tau need --a and --s")
    nu = args.nu if args.nu is not None else args.a / (2.0 * target.M * np.sqrt(args.s))
    tau = args.tau if args.tau is not None else selection_threshold(args.a, target.M, nu, args.s)
    n = args.n if args.n is not None else required_samples(
        args.r, args.s, args.a, target.dim, args.err, args.k1, args.k2
    )
    noise = AdditiveGaussian(args.noise_sigma) if args.noise_sigma > 0 else Noiseless()
    root = np.random.SeedSequence(args.seed)
    rng_ss, oracle_ss = root.spawn(2)
    oracle = StochasticOracle(
        target, noise, rng=np.random.Generator(np.random.Philox(oracle_ss))
    )
    support = estimate_support(
        oracle, theta0, n, nu, tau, np.random.Generator(np.random.Philox(rng_ss))
    )
    print(
        json.dumps(
            {
                "support": [int(j) for j in support],
                "n_used": int(n),
                "tau": float(tau),
                "nu": float(nu),
                "calls": int(oracle.calls),
            }
        )
    )
    return 0


def _cmd_verify_cov(args) -> int:
    if args.family == "klmc":
        if args.gamma is None:
            raise ConfigError("klmc verification needs --gamma")
        analytic = klmc_noise_cov(args.gamma, args.h)
        g, h = args.gamma, args.h
        kernels = [
            lambda s: np.sqrt(2 * g) * np.exp(-g * (h - s)),
            lambda s: np.sqrt(2 * g) * (1 - np.exp(-g * (h - s))) / g,
        ]
    else:
        if args.alpha is None:
            raise ConfigError("rmp verification needs --alpha")
        analytic = rmp_noise_cov(args.h, args.alpha, args.u)
        h, a, u = args.h, args.alpha * args.h, args.u
        kernels = [
            lambda s: np.sqrt(u) * (1 - np.exp(-2 * (a - s))) * (s <= a),
            lambda s: np.sqrt(u) * (1 - np.exp(-2 * (h - s))),
            lambda s: 2 * np.sqrt(u) * np.exp(-2 * (h - s)),
        ]
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
    mc = brownian_cov_oracle(kernels, args.h, args.substeps, args.paths, rng)
    rel = np.abs(analytic - mc) / np.maximum(np.abs(analytic), 1e-300)
    print("analytic:")
    print(analytic)
    print("monte-carlo:")
    print(mc)
    print(f"max relative error: {rel.max():.4g}")
    if args.tol is not None and rel.max() > args.tol:
        return 4
    return 0


def _cmd_diagnose(args) -> int:
    target = target_from_config(_load_json_arg(args.target))
    noise = AdditiveGaussian(args.sigma) if args.sigma > 0 else Noiseless()
    root = np.random.SeedSequence(args.seed)
    lines = ["theta_id,nu,b,mode,sigma,mc_var,bound,mc_bias,bias_bound,se"]
    for ti, theta_spec in enumerate(args.theta):
        theta = np.asarray(_load_json_arg(theta_spec), dtype=float)
        for nu in args.nu:
            for b in args.b:
                rng_ss, oracle_ss = root.spawn(2)
                oracle = StochasticOracle(
                    target, noise, feedback=args.mode,
                    rng=np.random.Generator(np.random.Philox(oracle_ss)),
                )
                diag = diagnose_estimator(
                    oracle, theta, SmoothingConfig(nu=nu, b=b), args.reps,
                    np.random.Generator(np.random.Philox(rng_ss)),
                )
                lines.append(
                    f"{ti},{nu!r},{b},{args.mode},{args.sigma!r},{diag.var_vs_f!r},"
                    f"{diag.var_bound!r},{diag.bias_norm!r},{diag.bias_bound!r},"
                    f"{diag.var_vs_f_se!r}"
                )
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
