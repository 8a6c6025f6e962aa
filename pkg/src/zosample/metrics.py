"""Wasserstein diagnostics and the Brownian-path covariance oracle.

Convergence checks compare sample clouds from a sampler against targets with
known moments. For 1-d clouds the quantile coupling gives the exact empirical
W2; in higher dimension the moment-matched Gaussian (Bures) distance and
sliced W2 serve as proxies.
"""

import numpy as np


def _cloud(points, name="cloud"):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError(f"{name} must be a nonempty (n, d) array")
    if not np.all(np.isfinite(pts)):
        raise ValueError(f"{name} contains non-finite entries")
    return pts


def w2_1d_exact(p, q) -> float:
    """Exact empirical 2-Wasserstein distance between 1-d sample clouds.

    Equal-size clouds use the sorted (quantile) coupling; otherwise both are
    resampled at the midpoint quantiles of the smaller size.
    """
    p = _cloud(p, "p")[:, 0]
    q = _cloud(q, "q")[:, 0]
    if p.shape == q.shape:
        diff = np.sort(p) - np.sort(q)
    else:
        k = min(p.shape[0], q.shape[0])
        grid = (np.arange(k) + 0.5) / k
        diff = np.quantile(p, grid) - np.quantile(q, grid)
    return float(np.sqrt(np.mean(diff**2)))


def _sqrtm_psd(mat):
    # symmetric square root with eigenvalue clipping at 0
    vals, vecs = np.linalg.eigh((mat + mat.T) / 2)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def fit_moments(p):
    """Sample mean and covariance of a cloud (ddof=1)."""
    p = _cloud(p)
    mean = p.mean(axis=0)
    if p.shape[0] < 2:
        return mean, np.zeros((p.shape[1], p.shape[1]))
    return mean, np.cov(p, rowvar=False, ddof=1).reshape(p.shape[1], p.shape[1])


def w2_gaussian_bures(p, mean, cov) -> float:
    """Closed-form Gaussian W2 between the cloud's fitted moments and (mean, cov).

    W2^2 = ||mu_hat - mean||^2
           + tr(cov_hat + cov - 2 (cov^1/2 cov_hat cov^1/2)^1/2).
    """
    p = _cloud(p)
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    d = mean.shape[0]
    if p.shape[1] != d or p.shape[0] < d + 1:
        raise ValueError(f"need at least {d + 1} points of dimension {d}")
    mu_hat, cov_hat = fit_moments(p)
    if np.linalg.eigvalsh(cov_hat)[0] <= 0:
        cov_hat = cov_hat + 1e-10 * np.eye(d)  # degenerate cloud, flagged by regularizing
    root = _sqrtm_psd(cov)
    cross = _sqrtm_psd(root @ cov_hat @ root)
    w2_sq = float(np.sum((mu_hat - mean) ** 2) + np.trace(cov_hat + cov - 2 * cross))
    return float(np.sqrt(max(w2_sq, 0.0)))


def sliced_w2(p, q, n_projections: int, rng) -> float:
    """Root-mean-square of exact 1-d W2 over random unit projection directions."""
    if n_projections < 16:
        raise ValueError("need at least 16 projection directions")
    p = _cloud(p, "p")
    q = _cloud(q, "q")
    if p.shape[1] != q.shape[1]:
        raise ValueError("clouds must share a dimension")
    dirs = rng.standard_normal((n_projections, p.shape[1]))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    vals = [w2_1d_exact(p @ w, q @ w) ** 2 for w in dirs]
    return float(np.sqrt(np.mean(vals)))


def brownian_cov_oracle(kernels, T, substeps, paths, rng, chunk=20000):
    """Monte-Carlo covariance of Ito integrals sharing one Brownian path.

    Each replicate simulates increments dW on a uniform grid over [0, T] and
    accumulates the left-point sums sum_j k_i(s_j) dW_j for every kernel k_i.
    Returns the empirical covariance matrix across ``paths`` replicates.
    """
    if substeps < 100:
        raise ValueError("need substeps >= 100")
    if paths < 10_000:
        raise ValueError("need paths >= 10000")
    grid = np.arange(substeps) * (T / substeps)
    weights = np.stack([np.asarray(k(grid), dtype=float) for k in kernels], axis=1)
    k = weights.shape[1]
    sqrt_dt = np.sqrt(T / substeps)

    total = np.zeros((k, k))
    mean = np.zeros(k)
    done = 0
    while done < paths:
        n = min(chunk, paths - done)
        incs = rng.standard_normal((n, substeps)) * sqrt_dt
        vals = incs @ weights  # (n, k)
        total += vals.T @ vals
        mean += vals.sum(axis=0)
        done += n
    mean /= paths
    return total / paths - np.outer(mean, mean)


def final_states(chains):
    """Stack the final iterate of each chain into an (n_chains, d) cloud."""
    return np.stack([np.asarray(c.final_state, dtype=float) for c in chains])


def pooled_states(chains, burn_frac: float = 0.5):
    """Pool recorded post-burn-in states across chains into one cloud."""
    clouds = []
    for c in chains:
        states = np.asarray(c.states, dtype=float)
        keep = states[int(np.floor(burn_frac * states.shape[0])):]
        clouds.append(keep)
    return np.concatenate(clouds, axis=0)
