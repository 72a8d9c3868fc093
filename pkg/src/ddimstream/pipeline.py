"""Streaming estimators tying codelengths, the selector, and the detectors
together.

Both estimators follow the scikit-learn convention (``get_params`` /
``set_params``, ``fit`` / ``partial_fit`` / ``transform`` / ``predict``) so
they compose with the wider ecosystem.  ``transform`` returns the (t, Ddim)
series; ``predict`` returns the per-step SDMS model estimate.

The per-step selector/detector logic lives in one engine shared by the GMM
and AR paths, so equal codelength vectors produce identical outputs
regardless of the model family.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator

from .ar import ar_codelengths
from .complexity import ComplexityCache, build_cache, config_from_batch
from .detectors import (
    FixedShareState,
    check_alarm,
    fixed_share_update,
    fsw_scores,
    sdms_step,
)
from .errors import ConfigError, InsufficientDataError
from .gmm import codelength_with_fallback, em_fit
from .selector import SelectorState, selector_step
from .stream_io import DEFAULT_DETECTORS, DataBatch, RunConfig, TraceRecord


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


class _StreamEngine:
    """Selector + detector state for one stream.

    ``step`` consumes one codelength vector and produces a trace record; the
    code path is family-agnostic by construction.
    """

    def __init__(self, K, *, a, b, lam, detectors, delta1, delta2, se_threshold, fs_alpha):
        self.K = K
        self.lam = lam
        self.detectors = tuple(detectors)
        self.delta1 = delta1
        self.delta2 = delta2
        self.se_threshold = se_threshold
        self.fs_alpha = fs_alpha
        self.state = SelectorState(K=K, a=a, b=b)
        self.fs_state: FixedShareState | None = None
        self._ddim_prev: float | None = None
        self._fsw_prev: float | None = None
        self._k_hat_prev: int | None = None
        self._fs_best_prev: int | None = None

    def step(self, t: int, codelengths: np.ndarray, n: int, assign_seed: int | None) -> TraceRecord:
        gamma = self.state.current_gamma()
        k_hat = sdms_step(codelengths, self.state.k_prev, gamma, self.lam)
        sel = selector_step(self.state, codelengths, n)
        self.state.k_prev = k_hat

        scores: dict[str, float] = {}
        scores["th"] = abs(sel.ddim - k_hat)
        scores["diff"] = math.nan if self._ddim_prev is None else abs(sel.ddim - self._ddim_prev)
        scores["sdms"] = 0.0 if self._k_hat_prev is None else float(k_hat != self._k_hat_prev)
        scores["se"] = sel.entropy

        alpha = self.fs_alpha if self.fs_alpha is not None else gamma
        if self.fs_state is None:
            self.fs_state = FixedShareState.uniform(self.K, alpha, sel.beta)
        self.fs_state.alpha = alpha
        self.fs_state.beta = sel.beta
        finite_losses = np.where(np.isfinite(codelengths), codelengths, np.max(
            codelengths[np.isfinite(codelengths)], initial=0.0) + 1e6)
        self.fs_state = fixed_share_update(self.fs_state, finite_losses)
        fs_best = self.fs_state.best_expert()
        scores["fs"] = 0.0 if self._fs_best_prev is None else float(fs_best != self._fs_best_prev)
        fsw_th, fsw_diff = fsw_scores(self.fs_state, k_hat, self._fsw_prev)
        scores["fsw_th"] = fsw_th
        scores["fsw_diff"] = fsw_diff

        thresholds = {
            "th": self.delta1,
            "diff": self.delta2,
            "fsw_th": self.delta1,
            "fsw_diff": self.delta2,
            "se": self.se_threshold,
            "sdms": 0.5,
            "fs": 0.5,
        }
        alarms = []
        for name in self.detectors:
            event = check_alarm(t, name, scores[name], thresholds[name])
            if event is not None:
                alarms.append({"t": event.t, "detector": event.detector,
                               "score": event.score, "threshold": event.threshold})

        self._ddim_prev = sel.ddim
        self._fsw_prev = _fsw_value(self.fs_state)
        self._k_hat_prev = k_hat
        self._fs_best_prev = fs_best

        return TraceRecord(
            t=t,
            n=n,
            ddim=sel.ddim,
            posterior=[float(p) for p in sel.posterior],
            k_hat=k_hat,
            scores=scores,
            alarms=alarms,
            gamma=gamma,
            beta=sel.beta,
            entropy=sel.entropy,
            assign_seed=assign_seed,
        )


def _fsw_value(fs_state: FixedShareState) -> float:
    w = fs_state.normalized_weights()
    return float(np.sum(w * np.arange(1, len(w) + 1)))


def _as_batches(X) -> list[DataBatch]:
    if isinstance(X, DataBatch):
        return [X]
    batches = []
    for i, item in enumerate(X):
        if isinstance(item, DataBatch):
            batches.append(item)
        else:
            batches.append(DataBatch(t=i, X=np.atleast_2d(np.asarray(item, dtype=float))))
    return batches


class GmmContinuousSelector(BaseEstimator):
    """Continuous model selection over GMM mixture sizes for a batch stream.

    Per batch, a GMM is fitted for every candidate k, latent labels are drawn
    from the component posterior, complete-variable NML codelengths feed the
    annealed model posterior, and the detector bank scores the step.
    """

    def __init__(
        self,
        k_max: int = 5,
        a: float = 2.0,
        b: float = 10.0,
        lam: float = 1.0,
        em_restarts: int = 5,
        em_tol: float = 1e-6,
        em_max_iter: int = 300,
        assign_mode: str = "sample",
        detectors: tuple[str, ...] = DEFAULT_DETECTORS,
        delta1: float = 0.1,
        delta2: float = 0.1,
        se_threshold: float = 0.5,
        fs_alpha: float | None = None,
        cache: ComplexityCache | None = None,
        n_max: int | None = None,
        random_state: int = 0,
    ):
        self.k_max = k_max
        self.a = a
        self.b = b
        self.lam = lam
        self.em_restarts = em_restarts
        self.em_tol = em_tol
        self.em_max_iter = em_max_iter
        self.assign_mode = assign_mode
        self.detectors = detectors
        self.delta1 = delta1
        self.delta2 = delta2
        self.se_threshold = se_threshold
        self.fs_alpha = fs_alpha
        self.cache = cache
        self.n_max = n_max
        self.random_state = random_state

    def _reset(self):
        self._engine = _StreamEngine(
            self.k_max,
            a=self.a,
            b=self.b,
            lam=self.lam,
            detectors=self.detectors,
            delta1=self.delta1,
            delta2=self.delta2,
            se_threshold=self.se_threshold,
            fs_alpha=self.fs_alpha,
        )
        self.cache_ = self.cache
        self.trace_ = []

    def partial_fit(self, batch) -> "GmmContinuousSelector":
        if not hasattr(self, "_engine"):
            self._reset()
        batch = _as_batches(batch)[0] if not isinstance(batch, DataBatch) else batch
        if self.cache_ is None:
            n_max = self.n_max if self.n_max is not None else batch.n
            self.cache_ = build_cache(config_from_batch(batch.X, n_max=n_max, k_max=self.k_max))
        if batch.n > self.cache_.config.n_max:
            raise ConfigError(
                f"batch size {batch.n} exceeds cache n_max {self.cache_.config.n_max}"
            )
        if batch.m != self.cache_.config.m:
            raise ConfigError(
                f"batch dimension {batch.m} does not match cache m {self.cache_.config.m}"
            )
        eps = self.cache_.config.eps
        t = batch.t
        assign_seed = _derived_seed(self.random_state, t)
        codelengths = np.empty(self.k_max)
        for k in range(1, self.k_max + 1):
            seed_tk = _derived_seed(self.random_state, t, k)
            try:
                model = em_fit(
                    batch.X,
                    k,
                    eps=eps,
                    seed=seed_tk,
                    restarts=self.em_restarts,
                    tol=self.em_tol,
                    max_iter=self.em_max_iter,
                )
            except InsufficientDataError:
                codelengths[k - 1] = math.inf
                continue
            codelengths[k - 1], _ = codelength_with_fallback(
                batch.X,
                model,
                self.cache_,
                mode=self.assign_mode,
                seed=_derived_seed(self.random_state, t, k, 1),
            )
        record = self._engine.step(t, codelengths, batch.n, assign_seed)
        self.trace_.append(record)
        return self

    def fit(self, X, y=None) -> "GmmContinuousSelector":
        self._reset()
        for batch in _as_batches(X):
            self.partial_fit(batch)
        return self

    def transform(self, X) -> np.ndarray:
        """(t, Ddim) pairs for the stream."""
        self.fit(X)
        return np.array([[rec.t, rec.ddim] for rec in self.trace_])

    def predict(self, X) -> np.ndarray:
        """Per-step SDMS model estimates."""
        self.fit(X)
        return np.array([rec.k_hat for rec in self.trace_])


class ArContinuousSelector(BaseEstimator):
    """Continuous model selection over AR orders for a scalar batch stream.

    Codelengths come from sequential NML coding of the latest window; the
    selector and detector step is shared with the GMM estimator.
    """

    def __init__(
        self,
        k_max: int = 5,
        a: float = 2.0,
        b: float = 10.0,
        lam: float = 1.0,
        window: int | None = None,
        quad_rtol: float = 1e-6,
        detectors: tuple[str, ...] = DEFAULT_DETECTORS,
        delta1: float = 0.1,
        delta2: float = 0.1,
        se_threshold: float = 0.5,
        fs_alpha: float | None = None,
        random_state: int = 0,
    ):
        self.k_max = k_max
        self.a = a
        self.b = b
        self.lam = lam
        self.window = window
        self.quad_rtol = quad_rtol
        self.detectors = detectors
        self.delta1 = delta1
        self.delta2 = delta2
        self.se_threshold = se_threshold
        self.fs_alpha = fs_alpha
        self.random_state = random_state

    def _reset(self):
        self._engine = _StreamEngine(
            self.k_max,
            a=self.a,
            b=self.b,
            lam=self.lam,
            detectors=self.detectors,
            delta1=self.delta1,
            delta2=self.delta2,
            se_threshold=self.se_threshold,
            fs_alpha=self.fs_alpha,
        )
        self._series = np.empty(0)
        self.trace_ = []

    def partial_fit(self, batch) -> "ArContinuousSelector":
        if not hasattr(self, "_engine"):
            self._reset()
        if not isinstance(batch, DataBatch):
            batch = DataBatch(t=len(self.trace_), X=np.asarray(batch, dtype=float).reshape(-1, 1))
        if batch.m != 1:
            raise ConfigError(f"AR streams must be scalar, got m={batch.m}")
        values = batch.X.ravel()
        self._series = np.concatenate([self._series, values])
        end = len(self._series)
        w = self.window if self.window is not None else batch.n
        start = max(end - w, 0)
        codelengths = ar_codelengths(self._series, start, end, self.k_max, quad_rtol=self.quad_rtol)
        record = self._engine.step(batch.t, codelengths, end - start, None)
        self.trace_.append(record)
        return self

    def fit(self, X, y=None) -> "ArContinuousSelector":
        self._reset()
        for batch in _as_batches(X):
            self.partial_fit(batch)
        return self

    def transform(self, X) -> np.ndarray:
        self.fit(X)
        return np.array([[rec.t, rec.ddim] for rec in self.trace_])

    def predict(self, X) -> np.ndarray:
        self.fit(X)
        return np.array([rec.k_hat for rec in self.trace_])


def run_stream(batches, config: RunConfig, cache: ComplexityCache | None = None):
    """Run a full stream under a RunConfig; returns the trace records."""
    common = dict(
        k_max=config.k_max,
        a=config.a,
        b=config.b,
        lam=config.lam,
        detectors=config.detectors,
        delta1=config.delta1,
        delta2=config.delta2,
        se_threshold=config.se_threshold,
        random_state=config.seed,
    )
    if config.family == "gmm":
        est = GmmContinuousSelector(
            em_restarts=config.em_restarts,
            em_tol=config.em_tol,
            em_max_iter=config.em_max_iter,
            assign_mode=config.assign_mode,
            cache=cache,
            **common,
        )
    else:
        est = ArContinuousSelector(window=config.window, **common)
    est.fit(batches)
    return est.trace_
