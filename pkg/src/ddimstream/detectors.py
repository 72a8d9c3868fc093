"""Model-change and change-sign detectors.

SDMS picks the per-step argmin of codelength plus a transition-prior penalty;
TH and Diff threshold |Ddim - k_hat| and the one-step Ddim difference; the
fixed-share baselines track the best expert; SE thresholds structural entropy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import NoValidModelError
from .selector import transition_prior_row


@dataclass(frozen=True)
class AlarmEvent:
    t: int
    detector: str
    score: float
    threshold: float


def sdms_step(
    codelengths: np.ndarray,
    k_prev: int | None,
    gamma: float,
    lam: float = 1.0,
) -> int:
    """argmin_k { L_k - lam * ln p(k | k_prev) }, 1-based.

    Ties go to k_prev first, then to the smaller index.  The first step
    (k_prev None) drops the penalty.
    """
    L = np.asarray(codelengths, dtype=float)
    K = len(L)
    if k_prev is None or lam == 0.0:
        scores = L.copy()
    else:
        prior = transition_prior_row(k_prev, gamma, K)
        with np.errstate(divide="ignore"):
            scores = L - lam * np.log(prior)
    feasible = np.isfinite(scores)
    if not np.any(feasible):
        raise NoValidModelError("no candidate model with finite penalized score")
    best = np.min(scores[feasible])
    tied = [k for k in range(1, K + 1) if feasible[k - 1] and scores[k - 1] == best]
    if k_prev is not None and k_prev in tied:
        return k_prev
    return tied[0]


def th_score(ddim_t: float, k_hat: int) -> float:
    """|Ddim - k_hat|."""
    return abs(ddim_t - k_hat)


def diff_score(ddim_t: float, ddim_prev: float) -> float:
    """|Ddim_t - Ddim_{t-1}|."""
    return abs(ddim_t - ddim_prev)


def check_alarm(t: int, detector: str, score: float, threshold: float) -> AlarmEvent | None:
    if math.isfinite(score) and score > threshold:
        return AlarmEvent(t=t, detector=detector, score=score, threshold=threshold)
    return None


def se_alarm(t: int, entropy: float, threshold: float) -> AlarmEvent | None:
    return check_alarm(t, "se", entropy, threshold)


@dataclass
class FixedShareState:
    """Expert-tracking weights over k = 1..K, kept in log domain."""

    log_weights: np.ndarray
    alpha: float
    beta: float

    @classmethod
    def uniform(cls, K: int, alpha: float, beta: float) -> "FixedShareState":
        return cls(log_weights=np.full(K, -math.log(K)), alpha=alpha, beta=beta)

    def normalized_weights(self) -> np.ndarray:
        w = np.exp(self.log_weights - logsumexp(self.log_weights))
        return w / w.sum()

    def best_expert(self) -> int:
        return int(np.argmax(self.log_weights)) + 1


def _fixed_share_raw(
    log_weights: np.ndarray, losses: np.ndarray, alpha: float, beta: float
) -> tuple[np.ndarray, np.ndarray]:
    """Exponential update then share step, both in log domain.

    Returns (log w^u, log w^s).  The share step mixes (1 - alpha - alpha/(K-1))
    of each expert's own updated weight with alpha/(K-1) of the total, which
    conserves total mass exactly.
    """
    K = len(log_weights)
    log_wu = log_weights - beta * np.asarray(losses, dtype=float)
    if K == 1 or alpha == 0.0:
        return log_wu, log_wu.copy()
    keep = 1.0 - alpha - alpha / (K - 1)
    if keep < 0:
        raise ValueError(f"alpha={alpha} too large for K={K} experts")
    log_total = logsumexp(log_wu)
    with np.errstate(divide="ignore"):
        log_ws = np.logaddexp(
            (np.log(keep) if keep > 0 else -np.inf) + log_wu,
            math.log(alpha / (K - 1)) + log_total,
        )
    return log_wu, log_ws


def fixed_share_update(state: FixedShareState, losses: np.ndarray) -> FixedShareState:
    """One fixed-share step; weights are shifted afterwards to guard underflow
    (best expert and normalized weights are shift-invariant)."""
    _, log_ws = _fixed_share_raw(state.log_weights, losses, state.alpha, state.beta)
    log_ws = log_ws - np.max(log_ws)
    return FixedShareState(log_weights=log_ws, alpha=state.alpha, beta=state.beta)


def fsw_ddim(state: FixedShareState) -> float:
    """Ddim-like value with normalized fixed-share weights in place of the posterior."""
    w = state.normalized_weights()
    return float(np.sum(w * np.arange(1, len(w) + 1)))


def fsw_scores(state: FixedShareState, k_hat: int, fsw_ddim_prev: float | None) -> tuple[float, float]:
    """(TH-like, Diff-like) scores from the fixed-share weights.

    The TH-like score references the SDMS estimate; the Diff-like score is NaN
    on the first step.
    """
    d = fsw_ddim(state)
    th_like = th_score(d, k_hat)
    diff_like = math.nan if fsw_ddim_prev is None else diff_score(d, fsw_ddim_prev)
    return th_like, diff_like
