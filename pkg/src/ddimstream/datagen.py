"""Seeded synthetic stream generators.

GMM streams grow a new mixture component whose mean interpolates from an
existing mean to its final position over a transition window; AR streams
switch the generating order probabilistically over the transition.  All
generators are pure functions of (config, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ar import is_stable
from .errors import ConfigError
from .stream_io import Annotations, DataBatch


def default_means(m: int, var: float, count: int = 4) -> np.ndarray:
    """Component means spaced 10*sqrt(var) apart along the first coordinate
    (pairwise separation >= 8*sqrt(var) so pre/post models are identifiable)."""
    means = np.zeros((count, m))
    means[:, 0] = 10.0 * np.sqrt(var) * np.arange(count)
    return means


@dataclass
class GmmStreamConfig:
    n: int = 1000
    m: int = 3
    alpha: float = 0.5
    tau1: int = 9
    tau2: int = 29
    tau3: int | None = None
    tau4: int | None = None
    T: int = 39
    r: float = 0.2
    var: float = 3.0
    seed: int = 0
    means: np.ndarray | None = None   # (4, m); defaults to default_means

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ConfigError(f"alpha must be in (0,1], got {self.alpha}")
        if not (0 <= self.tau1 < self.tau2 <= self.T):
            raise ConfigError(f"need tau1 < tau2 <= T, got ({self.tau1}, {self.tau2}, {self.T})")
        if not (0.0 <= self.r <= 1.0):
            raise ConfigError(f"r must be in [0,1], got {self.r}")
        if self.var <= 0:
            raise ConfigError(f"var must be positive, got {self.var}")
        if (self.tau3 is None) != (self.tau4 is None):
            raise ConfigError("tau3 and tau4 must be given together")
        if self.tau3 is not None:
            if not (self.tau2 < self.tau3 < self.tau4 <= self.T):
                raise ConfigError(
                    f"need tau2 < tau3 < tau4 <= T, got ({self.tau2}, {self.tau3}, {self.tau4}, {self.T})"
                )
        if self.means is None:
            self.means = default_means(self.m, self.var)
        else:
            self.means = np.asarray(self.means, dtype=float)
            if self.means.shape != (4, self.m):
                raise ConfigError(f"means must have shape (4, {self.m})")


def interpolated_mean(t: int, tau_lo: int, tau_hi: int, mu_from: np.ndarray,
                      mu_to: np.ndarray, alpha: float) -> np.ndarray:
    """Mean path [(tau_hi-t)^a mu_from + (t-tau_lo)^a mu_to] / [(tau_hi-t)^a + (t-tau_lo)^a]."""
    w_from = (tau_hi - t) ** alpha
    w_to = (t - tau_lo) ** alpha
    return (w_from * mu_from + w_to * mu_to) / (w_from + w_to)


def _component_covariances(m: int, r: float, var: float, rng: np.random.Generator,
                           count: int = 4) -> np.ndarray:
    """Sigma = (r A A' + (1-r) I) * var, A standard normal drawn once per component."""
    covs = np.empty((count, m, m))
    for i in range(count):
        A = rng.standard_normal((m, m))
        covs[i] = (r * A @ A.T + (1.0 - r) * np.eye(m)) * var
    return covs


def _gmm_means_at(config: GmmStreamConfig, t: int) -> np.ndarray:
    mu = config.means
    if t <= config.tau1:
        return mu[:2]
    if t <= config.tau2:
        third = interpolated_mean(t, config.tau1, config.tau2, mu[1], mu[2], config.alpha)
        return np.vstack([mu[:2], third])
    if config.tau3 is None or t <= config.tau3:
        return mu[:3]
    if t <= config.tau4:
        fourth = interpolated_mean(t, config.tau3, config.tau4, mu[2], mu[3], config.alpha)
        return np.vstack([mu[:3], fourth])
    return mu[:4]


def gen_gmm_stream(config: GmmStreamConfig) -> tuple[list[DataBatch], Annotations]:
    """GMM batch stream for t = 0..T with ground-truth annotations.

    Mixing weights are equal (1/k) at every step.  The sign time is the first
    step generated under the new mixture size.
    """
    rng = np.random.default_rng(config.seed)
    covs = _component_covariances(config.m, config.r, config.var, rng)
    chols = np.linalg.cholesky(covs)

    batches = []
    true_k = []
    for t in range(config.T + 1):
        means = _gmm_means_at(config, t)
        k = means.shape[0]
        labels = rng.integers(k, size=config.n)
        z = rng.standard_normal((config.n, config.m))
        X = means[labels] + np.einsum("nij,nj->ni", chols[labels], z)
        batches.append(DataBatch(t=t, X=X))
        true_k.append(k)

    sign_times = [config.tau1 + 1]
    transitions = [(config.tau1 + 1, config.tau2)]
    if config.tau3 is not None:
        sign_times.append(config.tau3 + 1)
        transitions.append((config.tau3 + 1, config.tau4))
    ann = Annotations(true_k=true_k, sign_times=sign_times, transitions=transitions)
    return batches, ann


def gen_gmm_multichange(config: GmmStreamConfig) -> tuple[list[DataBatch], Annotations]:
    """Two-change GMM stream (k: 2 -> 3 -> 4); requires tau3/tau4."""
    if config.tau3 is None:
        raise ConfigError("multi-change stream requires tau3 and tau4")
    return gen_gmm_stream(config)


@dataclass
class ArStreamConfig:
    n: int = 1000
    tau1: int = 9
    tau2: int = 29
    T: int = 39
    seed: int = 0
    coeffs_before: tuple[float, ...] = (0.6,)
    coeffs_after: tuple[float, ...] = (0.2, 0.1, 0.55)
    noise_std: float = 1.0

    def __post_init__(self):
        if not (0 <= self.tau1 < self.tau2 <= self.T):
            raise ConfigError(f"need tau1 < tau2 <= T, got ({self.tau1}, {self.tau2}, {self.T})")
        for name, coeffs in (("coeffs_before", self.coeffs_before), ("coeffs_after", self.coeffs_after)):
            if not is_stable(np.asarray(coeffs)):
                raise ConfigError(f"{name}={coeffs} is not a stable AR process")
        if self.noise_std <= 0:
            raise ConfigError(f"noise_std must be positive, got {self.noise_std}")


def gen_ar_stream(config: ArStreamConfig) -> tuple[list[DataBatch], Annotations]:
    """Scalar AR stream whose generating order switches from the low to the
    high order over the transition.

    During the transition each step's batch is generated with the high order
    with probability (t - tau1)/(tau2 - tau1), sampled per step.
    """
    rng = np.random.default_rng(config.seed)
    k_lo = len(config.coeffs_before)
    k_hi = len(config.coeffs_after)
    max_order = max(k_lo, k_hi)
    state = list(rng.standard_normal(max_order) * config.noise_std)

    batches = []
    true_k = []
    for t in range(config.T + 1):
        if t <= config.tau1:
            use_high = False
        elif t > config.tau2:
            use_high = True
        else:
            p_high = (t - config.tau1) / (config.tau2 - config.tau1)
            use_high = bool(rng.random() < p_high)
        coeffs = np.asarray(config.coeffs_after if use_high else config.coeffs_before)
        k = len(coeffs)
        values = np.empty(config.n)
        noise = rng.standard_normal(config.n) * config.noise_std
        for i in range(config.n):
            lags = np.array(state[-1 : -1 - k : -1])
            v = float(coeffs @ lags) + noise[i]
            values[i] = v
            state.append(v)
        state = state[-max_order:]
        batches.append(DataBatch(t=t, X=values.reshape(-1, 1)))
        true_k.append(k)

    ann = Annotations(
        true_k=true_k,
        sign_times=[config.tau1 + 1],
        transitions=[(config.tau1 + 1, config.tau2)],
    )
    return batches, ann
