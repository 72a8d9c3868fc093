"""Log-domain NML parametric complexity for complete-variable GMMs.

The complexity bound sums, over all ways to split n points into k cluster
counts, a multinomial weight times a per-cluster factor.  Everything is kept
in natural-log units and combined with log-sum-exp; raw terms overflow for n
in the hundreds.

The full (n, k) table is built with a convolution recursion:

    log C_n(k) = ln n! - n ln n + ln T_k(n)
    T_1(h)     = h^h * cluster(h) / h!
    T_k(n)     = sum_{r=0}^{n} T_1(r) * T_{k-1}(n - r)

which costs O(n^2 k) overall.  Cluster factors for h <= m+1 points are
dropped (treated as zero mass): the per-cluster covariance MLE needs at
least m+1 points and dropping terms only tightens an upper bound.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import ConfigError, SchemaVersionError

CACHE_SCHEMA_VERSION = 1


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if x <= 0:
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    return float(gammaln(x))


def log_multivariate_gamma(m: int, x: float) -> float:
    """ln Gamma_m(x) = (m(m-1)/4) ln pi + sum_j ln Gamma(x + (1-j)/2), j=1..m."""
    if m < 1:
        raise ValueError(f"dimension must be >= 1, got {m}")
    if x <= (m - 1) / 2:
        raise ValueError(f"log_multivariate_gamma requires x > (m-1)/2, got x={x}, m={m}")
    out = m * (m - 1) / 4 * math.log(math.pi)
    for j in range(1, m + 1):
        out += log_gamma(x + (1 - j) / 2)
    return out


@dataclass(frozen=True)
class ComplexityConfig:
    """Constants the complexity bound depends on.

    m: data dimension, R: bound on squared mean norms, eps: lower bound on
    covariance eigenvalues, n_max/k_max: table extent.
    """

    m: int
    R: float
    eps: float
    n_max: int
    k_max: int

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.R <= 0:
            raise ConfigError(f"R must be positive, got {self.R}")
        if self.eps <= 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if self.n_max < self.m + 1:
            raise ConfigError(f"n_max must be >= m+1, got n_max={self.n_max}, m={self.m}")
        if self.k_max < 1:
            raise ConfigError(f"k_max must be >= 1, got {self.k_max}")

    def digest(self) -> str:
        payload = json.dumps(
            {"m": self.m, "R": self.R, "eps": self.eps, "n_max": self.n_max, "k_max": self.k_max},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()


def config_from_batch(X: np.ndarray, n_max: int, k_max: int) -> ComplexityConfig:
    """Default R and eps frozen from the first batch.

    R = 1.5 * max squared row norm, eps = 0.01 * trace(sample cov) / m.
    """
    X = np.asarray(X, dtype=float)
    m = X.shape[1]
    R = 1.5 * float(np.max(np.sum(X * X, axis=1)))
    cov = np.cov(X, rowvar=False, bias=True).reshape(m, m)
    eps = 0.01 * float(np.trace(cov)) / m
    if eps <= 0:
        eps = 1e-6
    return ComplexityConfig(m=m, R=max(R, 1e-12), eps=eps, n_max=n_max, k_max=k_max)


def log_b_constant(config: ComplexityConfig) -> float:
    """ln of the per-cluster constant 2^{m+1} R^{m/2} eps^{-m^2/2} / (m^{m+1} Gamma(m/2))."""
    m = config.m
    return (
        (m + 1) * math.log(2.0)
        + (m / 2) * math.log(config.R)
        - (m * m / 2) * math.log(config.eps)
        - (m + 1) * math.log(m)
        - log_gamma(m / 2)
    )


def log_cluster_term(h: int, config: ComplexityConfig) -> float:
    """ln[ B(m,R,eps) * (h/(2e))^{mh/2} / Gamma_m((h-1)/2) ], or -inf for h <= m+1."""
    m = config.m
    if h <= m + 1:
        return -math.inf
    return (
        log_b_constant(config)
        + (m * h / 2) * (math.log(h) - math.log(2.0) - 1.0)
        - log_multivariate_gamma(m, (h - 1) / 2)
    )


def _log_t1(config: ComplexityConfig) -> np.ndarray:
    """log T_1(h) = h ln h - ln h! + log cluster(h), for h = 0..n_max."""
    n_max = config.n_max
    out = np.full(n_max + 1, -np.inf)
    for h in range(config.m + 2, n_max + 1):
        out[h] = h * math.log(h) - float(gammaln(h + 1)) + log_cluster_term(h, config)
    return out


def _log_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """c[n] = logsumexp_r a[r] + b[n-r]."""
    n_max = len(a) - 1
    out = np.full(n_max + 1, -np.inf)
    for n in range(n_max + 1):
        terms = a[: n + 1] + b[n::-1]
        if np.any(np.isfinite(terms)):
            out[n] = logsumexp(terms)
    return out


@dataclass(frozen=True)
class ComplexityCache:
    """Immutable table of log C_n(k), n = 0..n_max, k = 1..k_max."""

    config: ComplexityConfig
    table: np.ndarray  # shape (n_max+1, k_max); column j holds k = j+1

    def log_complexity(self, n: int, k: int) -> float:
        if not (0 <= n <= self.config.n_max):
            raise ValueError(f"n={n} outside tabulated range [0, {self.config.n_max}]")
        if not (1 <= k <= self.config.k_max):
            raise ValueError(f"k={k} outside tabulated range [1, {self.config.k_max}]")
        return float(self.table[n, k - 1])

    def save(self, path) -> None:
        payload = {
            "schema_version": CACHE_SCHEMA_VERSION,
            "config": {
                "m": self.config.m,
                "R": self.config.R,
                "eps": self.config.eps,
                "n_max": self.config.n_max,
                "k_max": self.config.k_max,
            },
            "config_digest": self.config.digest(),
            "table": [[None if not math.isfinite(v) else v for v in row] for row in self.table.tolist()],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path) -> "ComplexityCache":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        version = payload.get("schema_version")
        if version != CACHE_SCHEMA_VERSION:
            raise SchemaVersionError(f"unsupported cache schema version: {version!r}")
        config = ComplexityConfig(**payload["config"])
        if payload.get("config_digest") != config.digest():
            raise SchemaVersionError("cache config digest mismatch")
        table = np.array(
            [[-math.inf if v is None else v for v in row] for row in payload["table"]], dtype=float
        )
        return cls(config=config, table=table)


def build_cache(config: ComplexityConfig) -> ComplexityCache:
    """Tabulate log C_n(k) for the whole (n, k) grid via the convolution recursion."""
    n_max = config.n_max
    log_t1 = _log_t1(config)
    n = np.arange(n_max + 1)
    # ln n! - n ln n, with the n = 0 term equal to 0
    prefactor = gammaln(n + 1) - np.where(n > 0, n * np.log(np.maximum(n, 1)), 0.0)

    table = np.full((n_max + 1, config.k_max), -np.inf)
    log_tk = log_t1
    table[:, 0] = prefactor + log_tk
    for k in range(2, config.k_max + 1):
        log_tk = _log_convolve(log_t1, log_tk)
        table[:, k - 1] = prefactor + log_tk
    table.setflags(write=False)
    return ComplexityCache(config=config, table=table)


def log_parametric_complexity_gmm(n: int, k: int, config: ComplexityConfig) -> float:
    """log C_n(k) for a single (n, k); builds the recursion up to n."""
    if not (0 <= n <= config.n_max):
        raise ValueError(f"n={n} outside range [0, {config.n_max}]")
    if not (1 <= k <= config.k_max):
        raise ValueError(f"k={k} outside range [1, {config.k_max}]")
    log_t1 = _log_t1(config)[: n + 1]
    log_tk = log_t1
    for _ in range(k - 1):
        log_tk = _log_convolve(log_t1, log_tk)
    prefactor = float(gammaln(n + 1)) - (n * math.log(n) if n > 0 else 0.0)
    return prefactor + float(log_tk[n])
