"""Per-batch GMM fitting, latent label assignment, and the complete-variable
NML codelength.

Components are indexed 0..k-1 internally.  Covariance eigenvalues are floored
at the eps from the complexity configuration so every density is defined and
the complexity bound's eigenvalue assumption holds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complexity import ComplexityCache
from .errors import DegenerateAssignmentError, InsufficientDataError

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class GmmModel:
    k: int
    weights: np.ndarray        # (k,)
    means: np.ndarray          # (k, m)
    covariances: np.ndarray    # (k, m, m)

    @property
    def m(self) -> int:
        return self.means.shape[1]

    def component_log_density(self, X: np.ndarray) -> np.ndarray:
        """Per-point, per-component Gaussian log density, shape (n, k)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n, m = X.shape
        out = np.empty((n, self.k))
        for i in range(self.k):
            out[:, i] = _gaussian_log_density(X, self.means[i], self.covariances[i])
        return out

    def log_density(self, X: np.ndarray) -> np.ndarray:
        """Per-point log mixture density."""
        comp = self.component_log_density(X) + np.log(self.weights)
        mx = comp.max(axis=1, keepdims=True)
        return (mx + np.log(np.exp(comp - mx).sum(axis=1, keepdims=True))).ravel()

    def responsibilities(self, X: np.ndarray) -> np.ndarray:
        comp = self.component_log_density(X) + np.log(self.weights)
        comp -= comp.max(axis=1, keepdims=True)
        r = np.exp(comp)
        return r / r.sum(axis=1, keepdims=True)


def _gaussian_log_density(X: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    m = len(mean)
    sign, logdet = np.linalg.slogdet(cov)
    diff = X - mean
    sol = np.linalg.solve(cov, diff.T).T
    maha = np.sum(diff * sol, axis=1)
    return -0.5 * (m * _LOG_2PI + logdet + maha)


def floor_covariance(cov: np.ndarray, eps: float) -> np.ndarray:
    """Symmetrize and clip eigenvalues from below at eps."""
    cov = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(cov)
    vals = np.maximum(vals, eps)
    return (vecs * vals) @ vecs.T


def _kmeanspp_centers(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    for _ in range(1, k):
        d2 = np.min([np.sum((X - c) ** 2, axis=1) for c in centers], axis=0)
        total = d2.sum()
        if total <= 0:
            centers.append(X[rng.integers(n)])
            continue
        centers.append(X[rng.choice(n, p=d2 / total)])
    return np.array(centers)


def em_fit(
    X: np.ndarray,
    k: int,
    *,
    eps: float,
    seed: int = 0,
    restarts: int = 5,
    tol: float = 1e-6,
    max_iter: int = 300,
) -> GmmModel:
    """Fit a k-component GMM by EM with k-means++ seeding; best of `restarts`."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, m = X.shape
    if n < k * (m + 2):
        raise InsufficientDataError(f"need n >= k(m+2) = {k * (m + 2)} points for k={k}, got {n}")
    rng = np.random.default_rng(seed)
    best, best_ll = None, -np.inf
    for _ in range(max(1, restarts)):
        model, ll = _em_once(X, k, eps, rng, tol, max_iter)
        if ll > best_ll:
            best, best_ll = model, ll
    return best


def _em_once(X, k, eps, rng, tol, max_iter):
    n, m = X.shape
    means = _kmeanspp_centers(X, k, rng)
    global_cov = floor_covariance(np.cov(X, rowvar=False, bias=True).reshape(m, m), eps)
    covs = np.repeat(global_cov[None], k, axis=0)
    weights = np.full(k, 1.0 / k)
    model = GmmModel(k=k, weights=weights, means=means, covariances=covs)

    prev_ll = -np.inf
    ll = -np.inf
    for _ in range(max_iter):
        comp = model.component_log_density(X) + np.log(model.weights)
        mx = comp.max(axis=1, keepdims=True)
        se = np.exp(comp - mx)
        ssum = se.sum(axis=1, keepdims=True)
        ll = float(np.sum(mx + np.log(ssum)))
        resp = se / ssum

        nk = resp.sum(axis=0)
        # re-seed any component that lost all its mass
        for i in np.where(nk < 1e-10)[0]:
            resp[:, i] = 0.0
            resp[rng.integers(n), i] = 1.0
        nk = resp.sum(axis=0)

        weights = nk / nk.sum()
        means = (resp.T @ X) / nk[:, None]
        covs = np.empty((k, m, m))
        for i in range(k):
            diff = X - means[i]
            covs[i] = floor_covariance((resp[:, i][:, None] * diff).T @ diff / nk[i], eps)
        model = GmmModel(k=k, weights=weights, means=means, covariances=covs)

        if np.isfinite(prev_ll) and abs(ll - prev_ll) <= tol * abs(prev_ll):
            break
        prev_ll = ll
    return model, ll


def assign_labels(X: np.ndarray, model: GmmModel, mode: str = "sample", seed: int = 0) -> np.ndarray:
    """Latent labels per point: posterior sample or posterior argmax."""
    resp = model.responsibilities(X)
    if mode == "map":
        return np.argmax(resp, axis=1)
    if mode == "sample":
        rng = np.random.default_rng(seed)
        cdf = np.cumsum(resp, axis=1)
        u = rng.random(resp.shape[0])
        return np.sum(u[:, None] > cdf, axis=1).clip(0, model.k - 1)
    raise ValueError(f"unknown assignment mode: {mode!r}")


def complete_nml_codelength(X: np.ndarray, labels: np.ndarray, k: int, cache: ComplexityCache) -> float:
    """NML codelength (nats) of the complete data (X, labels) under mixture size k.

    -ln p(x, z; MLE) + log C_n(k), with pi_i = n_i/n and per-cluster Gaussian
    MLEs (covariances floored at eps).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    labels = np.asarray(labels)
    n = X.shape[0]
    m = X.shape[1]
    counts = np.bincount(labels, minlength=k)
    if np.any(counts <= m + 1):
        starved = int(np.argmin(counts))
        raise DegenerateAssignmentError(
            f"cluster {starved} has {counts[starved]} <= m+1 = {m + 1} points"
        )
    nll = _complete_negative_log_likelihood(X, labels, counts, cache.config.eps)
    return nll + cache.log_complexity(n, k)


def _complete_negative_log_likelihood(X, labels, counts, eps) -> float:
    """-ln p(x, z; MLE): per-cluster Gaussian NLL minus sum_i n_i ln(n_i/n),
    over nonempty clusters."""
    n = X.shape[0]
    nll = 0.0
    for i, ni in enumerate(counts):
        if ni == 0:
            continue
        pts = X[labels == i]
        mu = pts.mean(axis=0)
        cov = floor_covariance((pts - mu).T @ (pts - mu) / ni, eps)
        nll -= float(np.sum(_gaussian_log_density(pts, mu, cov)))
        nll -= ni * (np.log(ni) - np.log(n))
    return nll


def codelength_with_fallback(
    X: np.ndarray,
    model: GmmModel,
    cache: ComplexityCache,
    *,
    mode: str = "sample",
    seed: int = 0,
    max_retries: int = 10,
) -> tuple[float, np.ndarray]:
    """Codelength with the degenerate-assignment fallback chain.

    Sampled assignments are retried up to `max_retries` times, then the MAP
    assignment is tried, then starved clusters are merged into their points'
    next-best components.  Returns (codelength, labels actually used).
    """
    k = model.k
    m = model.m
    attempts = []
    if mode == "sample":
        attempts = [("sample", seed + r) for r in range(max_retries)]
    attempts.append(("map", seed))
    for attempt_mode, attempt_seed in attempts:
        labels = assign_labels(X, model, mode=attempt_mode, seed=attempt_seed)
        try:
            return complete_nml_codelength(X, labels, k, cache), labels
        except DegenerateAssignmentError:
            continue
    # merge starved clusters: move their points to the next most probable
    # surviving component until every nonempty cluster has >= m+2 points
    labels = assign_labels(X, model, mode="map", seed=seed)
    resp = model.responsibilities(X)
    alive = np.ones(k, dtype=bool)
    while True:
        counts = np.bincount(labels, minlength=k)
        starved = [i for i in range(k) if alive[i] and 0 < counts[i] <= m + 1]
        if not starved:
            break
        if alive.sum() <= 1:
            break
        victim = min(starved, key=lambda i: counts[i])
        alive[victim] = False
        masked = resp.copy()
        masked[:, ~alive] = -np.inf
        labels = np.where(labels == victim, np.argmax(masked, axis=1), labels)
    counts = np.bincount(labels, minlength=k)
    n = X.shape[0]
    nll = _complete_negative_log_likelihood(X, labels, counts, cache.config.eps)
    return nll + cache.log_complexity(n, k), labels
