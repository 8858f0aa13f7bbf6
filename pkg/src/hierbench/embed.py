"""Euclidean embedding utilities: PCA projection, GMM fitting by EM,
likelihood-based cluster assignment, and the separation-boosting rescale
transform x'' = x' + s * mu_assigned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .core import counter_rng

# above this input dimension the PCA eigenproblem is restricted to the
# leading subspace instead of the full covariance
PCA_DENSE_LIMIT = 2000

VAR_FLOOR = 1e-6


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # h x d, orthonormal rows
    explained_variance: np.ndarray

    def __post_init__(self):
        gram = self.components @ self.components.T
        if not np.allclose(gram, np.eye(len(self.components)), atol=1e-9):
            raise ValueError("components must be orthonormal")


def pca_fit(points: np.ndarray, h: int) -> PcaModel:
    """Top-h principal directions of the centered data.

    Sign convention: the largest-magnitude entry of each component is
    positive, which makes the model deterministic.
    """
    pts = np.asarray(points, dtype=np.float64)
    n, d = pts.shape
    if not 1 <= h <= min(n, d):
        raise ValueError(f"h={h} out of range [1, {min(n, d)}]")
    mean = pts.mean(axis=0)
    centered = pts - mean
    if d <= PCA_DENSE_LIMIT:
        cov = centered.T @ centered / max(n - 1, 1)
        evals, evecs = np.linalg.eigh(cov)
        order = np.argsort(evals)[::-1][:h]
        var, comps = evals[order], evecs[:, order].T
    else:
        from scipy.sparse.linalg import eigsh

        cov = centered.T @ centered / max(n - 1, 1)
        evals, evecs = eigsh(cov, k=h, which="LA")
        order = np.argsort(evals)[::-1]
        var, comps = evals[order], evecs[:, order].T
    comps = comps.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(mean, comps, np.maximum(var, 0.0))


def pca_transform(model: PcaModel, points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    return (pts - model.mean) @ model.components.T


@dataclass(frozen=True)
class GmmParams:
    """Fitted mixture: weights sum to 1; variances per component, either
    shape (k,) spherical or (k, h) diagonal."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        mu = np.asarray(self.means, dtype=np.float64)
        var = np.asarray(self.variances, dtype=np.float64)
        if abs(w.sum() - 1.0) > 1e-6 or np.any(w <= 0):
            raise ValueError("weights must be positive and sum to 1")
        if var.ndim not in (1, 2) or len(var) != len(w) or len(mu) != len(w):
            raise ValueError("inconsistent GMM parameter shapes")
        if np.any(var < VAR_FLOOR * (1 - 1e-12)):
            var = np.maximum(var, VAR_FLOOR)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "variances", var)

    @property
    def k(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def spherical(self) -> bool:
        return self.variances.ndim == 1


@dataclass
class GmmFitConfig:
    covariance: str = "spherical"  # or "diag"
    tol: float = 1e-6
    max_iter: int = 300
    var_floor: float = VAR_FLOOR
    n_init: int = 1


def _log_component_densities(gmm: GmmParams, points: np.ndarray) -> np.ndarray:
    """n x k matrix of log N(x | mu_j, var_j) without mixing weights."""
    x = np.atleast_2d(np.asarray(points, dtype=np.float64))
    d = x.shape[1]
    if gmm.spherical:
        sq = ((x[:, None, :] - gmm.means[None, :, :]) ** 2).sum(axis=2)
        return -0.5 * (d * np.log(2 * np.pi * gmm.variances)[None, :]
                       + sq / gmm.variances[None, :])
    diff = x[:, None, :] - gmm.means[None, :, :]
    return -0.5 * (np.log(2 * np.pi * gmm.variances).sum(axis=1)[None, :]
                   + (diff ** 2 / gmm.variances[None, :, :]).sum(axis=2))


def log_likelihood(gmm: GmmParams, points: np.ndarray) -> float:
    log_dens = _log_component_densities(gmm, points) + np.log(gmm.weights)[None, :]
    return float(logsumexp(log_dens, axis=1).sum())


def _kmeans_pp_init(points: np.ndarray, k: int, rng) -> np.ndarray:
    """k-means++ seeding: each next center drawn proportionally to the
    squared distance to the nearest chosen center."""
    n = points.shape[0]
    centers = [points[int(rng.integers(n))]]
    for _ in range(1, k):
        d2 = np.min(
            [((points - c) ** 2).sum(axis=1) for c in centers], axis=0)
        total = d2.sum()
        if total <= 0:
            centers.append(points[int(rng.integers(n))])
            continue
        r = rng.random() * total
        centers.append(points[int(np.searchsorted(np.cumsum(d2), r))])
    return np.array(centers)


def gmm_fit(points: np.ndarray, k: int, seed: int = 0,
            config: GmmFitConfig | None = None) -> GmmParams:
    """EM fit to a local optimum; log-likelihood is non-decreasing per
    iteration and iteration stops on relative improvement < tol.

    A component whose responsibility mass collapses is re-seeded from the
    point farthest from its nearest current mean.
    """
    cfg = config or GmmFitConfig()
    pts = np.asarray(points, dtype=np.float64)
    n, d = pts.shape
    if n < k:
        raise ValueError(f"need at least k={k} points, got {n}")
    rng = counter_rng(seed)
    means = _kmeans_pp_init(pts, k, rng)
    weights = np.full(k, 1.0 / k)
    base_var = max(float(pts.var()), cfg.var_floor)
    if cfg.covariance == "spherical":
        variances = np.full(k, base_var)
    else:
        variances = np.maximum(pts.var(axis=0), cfg.var_floor) * np.ones((k, d))
    gmm = GmmParams(weights, means, variances)
    prev_ll = -np.inf
    for _ in range(cfg.max_iter):
        log_dens = _log_component_densities(gmm, pts) + np.log(gmm.weights)[None, :]
        norm = logsumexp(log_dens, axis=1)
        resp = np.exp(log_dens - norm[:, None])
        ll = float(norm.sum())
        mass = resp.sum(axis=0)
        for j in np.where(mass < 1e-10)[0]:
            # degenerate component: hard re-seed from the farthest point
            d2 = np.min(((pts[:, None, :] - gmm.means[None, :, :]) ** 2).sum(axis=2), axis=1)
            far = int(np.argmax(d2))
            resp[:, j] = 0.0
            resp[far, :] = 0.0
            resp[far, j] = 1.0
            mass = resp.sum(axis=0)
        weights = mass / n
        means = (resp.T @ pts) / mass[:, None]
        if cfg.covariance == "spherical":
            sq = ((pts[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
            variances = np.maximum((resp * sq).sum(axis=0) / (mass * d), cfg.var_floor)
        else:
            diff2 = (pts[:, None, :] - means[None, :, :]) ** 2
            variances = np.maximum(
                (resp[:, :, None] * diff2).sum(axis=0) / mass[:, None], cfg.var_floor)
        gmm = GmmParams(weights, means, variances)
        if ll - prev_ll < cfg.tol * abs(ll) and np.isfinite(prev_ll):
            break
        prev_ll = ll
    return gmm


def assign(gmm: GmmParams, points: np.ndarray, use_prior: bool = False) -> np.ndarray:
    """Component index per point by likelihood argmax.

    Mixing weights are deliberately ignored by default; pass
    use_prior=True for the posterior (weighted) argmax.  Exact ties go to
    the smallest index.
    """
    log_dens = _log_component_densities(gmm, points)
    if use_prior:
        log_dens = log_dens + np.log(gmm.weights)[None, :]
    return np.argmax(log_dens, axis=1)


@dataclass(frozen=True)
class RescaleConfig:
    s: float = 3.0

    def __post_init__(self):
        if self.s < 0:
            raise ValueError("rescaling factor must be >= 0")


def rescale(points: np.ndarray, gmm: GmmParams,
            config: RescaleConfig = RescaleConfig(),
            assignments: np.ndarray | None = None) -> np.ndarray:
    """Translate each point by s times its assigned component mean.

    Points with the same assignment move together, so within-cluster
    distances are preserved bitwise; points sitting exactly at the
    component means map to (1+s) times the means.
    """
    pts = np.asarray(points, dtype=np.float64)
    if assignments is None:
        assignments = assign(gmm, pts)
    return pts + config.s * gmm.means[assignments]
