"""Annealed model posterior, descriptive dimensionality, and structural
entropy: the continuous model selection core.

Candidate model indices are k = 1..K (mixture size or AR order).  All
codelengths and entropies are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import NoValidModelError

_GAMMA_CLAMP = 1e-6


def transition_prior(k: int, k_prev: int, gamma: float, K: int) -> float:
    """p(k | k_prev): stay with 1-gamma (1-gamma/2 at the k=1 or k=K boundary),
    move to an adjacent index with gamma/2, zero otherwise."""
    if not (0.0 < gamma < 1.0):
        raise ValueError(f"gamma must be in (0,1), got {gamma}")
    if not (1 <= k <= K and 1 <= k_prev <= K):
        raise ValueError(f"indices must be in 1..{K}, got k={k}, k_prev={k_prev}")
    if k == k_prev:
        return 1.0 - gamma / 2 if k_prev in (1, K) else 1.0 - gamma
    if abs(k - k_prev) == 1:
        return gamma / 2
    return 0.0


def transition_prior_row(k_prev: int, gamma: float, K: int) -> np.ndarray:
    return np.array([transition_prior(k, k_prev, gamma, K) for k in range(1, K + 1)])


def gamma_map(N_t: int, t: int, a: float = 2.0, b: float = 10.0) -> float:
    """MAP switching-rate estimate (N_t + a - 1)/(t + a + b - 2), clamped to (0,1)."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    value = (N_t + a - 1.0) / (t + a + b - 2.0)
    return min(max(value, _GAMMA_CLAMP), 1.0 - _GAMMA_CLAMP)


def model_posterior(
    codelengths: np.ndarray,
    k_prev: int | None,
    gamma: float,
    beta: float,
) -> np.ndarray:
    """Annealed posterior over k = 1..K.

    p(k) ~ exp(-beta * L_k + beta * ln p(k | k_prev)).  A None k_prev (first
    step) uses a uniform prior.  Zero prior mass gives zero posterior mass.
    """
    L = np.asarray(codelengths, dtype=float)
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    K = len(L)
    if k_prev is None:
        prior = np.full(K, 1.0 / K)
    else:
        prior = transition_prior_row(k_prev, gamma, K)
    with np.errstate(divide="ignore"):
        log_post = -beta * L + beta * np.log(prior)
    log_post[~np.isfinite(L)] = -np.inf
    if not np.any(np.isfinite(log_post)):
        raise NoValidModelError("no candidate model with finite penalized codelength")
    probs = np.exp(log_post - logsumexp(log_post))
    return probs / probs.sum()


def ddim(posterior: np.ndarray) -> float:
    """Posterior-weighted model index: sum_k p(k) * k for k = 1..K."""
    p = np.asarray(posterior, dtype=float)
    return float(np.sum(p * np.arange(1, len(p) + 1)))


def dimension_scale(m: int) -> float:
    """Per-component parameter count scale f(m) = m^2/2 + 5m/2."""
    return m * m / 2.0 + 5.0 * m / 2.0


def ddim_unnormalized(posterior: np.ndarray, m: int) -> float:
    """Posterior-weighted full parameter count: sum_k p(k) * (k f(m) - 1)."""
    p = np.asarray(posterior, dtype=float)
    k = np.arange(1, len(p) + 1)
    return float(np.sum(p * (k * dimension_scale(m) - 1.0)))


def structural_entropy(posterior: np.ndarray) -> float:
    """Shannon entropy of the model posterior in nats, with 0 ln 0 = 0."""
    p = np.asarray(posterior, dtype=float)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


@dataclass
class SelectorState:
    """Single-writer per-stream selector state."""

    K: int
    a: float = 2.0
    b: float = 10.0
    k_prev: int | None = None        # previous SDMS-style estimate
    argmax_prev: int | None = None   # previous posterior argmax, drives N_t
    N_t: int = 0
    t: int = 0
    last_gamma: float = field(default=_GAMMA_CLAMP, repr=False)

    def current_gamma(self) -> float:
        return gamma_map(self.N_t, max(self.t, 1), self.a, self.b)


@dataclass(frozen=True)
class SelectorStep:
    """One step's selector outputs."""

    posterior: np.ndarray
    ddim: float
    entropy: float
    gamma: float
    beta: float


def selector_step(state: SelectorState, codelengths: np.ndarray, n: int) -> SelectorStep:
    """Advance the selector one step on this step's codelength vector.

    beta = 1/sqrt(n) for the current batch size.  The change counter N_t
    increments whenever the posterior argmax moves between consecutive steps.
    """
    gamma = state.current_gamma()
    beta = 1.0 / math.sqrt(n)
    posterior = model_posterior(codelengths, state.k_prev, gamma, beta)
    argmax = int(np.argmax(posterior)) + 1
    if state.argmax_prev is not None and argmax != state.argmax_prev:
        state.N_t += 1
    state.argmax_prev = argmax
    state.t += 1
    state.last_gamma = gamma
    return SelectorStep(
        posterior=posterior,
        ddim=ddim(posterior),
        entropy=structural_entropy(posterior),
        gamma=gamma,
        beta=beta,
    )
