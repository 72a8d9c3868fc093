"""Alarm-stream scoring: benefit, false alarm rate, Benefit-FAR curve, AUC.

For a threshold sweep, each threshold turns a score stream into alarm times;
benefit rewards the first alarm after each true sign time with a linearly
decaying payoff, FAR is the fraction of alarms outside transition intervals.
The default sweep uses 101 evenly spaced quantiles of the observed scores so
the grid is scale-free across detectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass
class EvalConfig:
    sign_times: list[int]
    transitions: list[tuple[int, int]]
    U: int = 10
    grid_size: int = 101

    def __post_init__(self):
        if self.U < 1:
            raise ConfigError(f"U must be >= 1, got {self.U}")
        if self.grid_size < 1:
            raise ConfigError(f"grid_size must be >= 1, got {self.grid_size}")
        if not self.sign_times:
            raise ConfigError("at least one sign time is required")
        self.sign_times = sorted(self.sign_times)


def benefit(t_hat: int | None, t_star: int, U: int) -> float:
    """1 - (t_hat - t_star)/U for t_star <= t_hat < t_star + U, else 0."""
    if t_hat is None:
        return 0.0
    if t_star <= t_hat < t_star + U:
        return 1.0 - (t_hat - t_star) / U
    return 0.0


def far(alarm_times, transitions) -> float:
    """Fraction of alarms outside every transition interval; 0 with no alarms."""
    alarm_times = list(alarm_times)
    if not alarm_times:
        return 0.0
    outside = sum(1 for t in alarm_times if not any(lo <= t <= hi for lo, hi in transitions))
    return outside / len(alarm_times)


def _first_alarms_per_change(alarm_times, sign_times) -> list[int | None]:
    """First alarm at or after each sign time and before the next one."""
    bounds = list(sign_times) + [math.inf]
    firsts = []
    for i, t_star in enumerate(sign_times):
        nxt = bounds[i + 1]
        candidates = [t for t in alarm_times if t_star <= t < nxt]
        firsts.append(min(candidates) if candidates else None)
    return firsts


def mean_benefit(alarm_times, config: EvalConfig) -> float:
    """Benefit averaged over all change points."""
    firsts = _first_alarms_per_change(alarm_times, config.sign_times)
    values = [benefit(t_hat, t_star, config.U) for t_hat, t_star in zip(firsts, config.sign_times)]
    return float(np.mean(values))


@dataclass
class BenefitFarCurve:
    points: list[tuple[float, float]]   # (FAR, benefit), sorted by FAR
    auc: float
    thresholds: list[float] = field(default_factory=list)


def default_threshold_grid(scores: np.ndarray, grid_size: int = 101) -> np.ndarray:
    finite = scores[np.isfinite(scores)]
    if len(finite) == 0:
        return np.array([0.0])
    return np.quantile(finite, np.linspace(0.0, 1.0, grid_size))


def benefit_far_auc(
    times: np.ndarray,
    scores: np.ndarray,
    config: EvalConfig,
    grid: np.ndarray | None = None,
) -> BenefitFarCurve:
    """Sweep thresholds over the score stream and integrate the Benefit-FAR curve.

    The curve is extended flat to FAR = 0 on the left and FAR = 1 on the
    right before trapezoidal integration; duplicate FAR values keep the best
    benefit.
    """
    times = np.asarray(times)
    scores = np.asarray(scores, dtype=float)
    if grid is None:
        grid = default_threshold_grid(scores, config.grid_size)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ConfigError("threshold grid is empty")

    raw: dict[float, float] = {}
    with np.errstate(invalid="ignore"):
        for theta in grid:
            mask = np.isfinite(scores) & (scores > theta)
            alarms = times[mask]
            f = far(alarms, config.transitions)
            bnf = mean_benefit(alarms, config)
            if f not in raw or bnf > raw[f]:
                raw[f] = bnf
    points = sorted(raw.items())

    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    # flat endpoint extension over FAR in [0, 1]
    if xs[0] > 0.0:
        xs.insert(0, 0.0)
        ys.insert(0, ys[0])
    if xs[-1] < 1.0:
        xs.append(1.0)
        ys.append(ys[-1])
    auc = float(np.trapezoid(ys, xs))
    return BenefitFarCurve(points=points, auc=auc, thresholds=[float(v) for v in grid])


def evaluate_trace_scores(
    records,
    config: EvalConfig,
    detectors: list[str] | None = None,
) -> dict[str, BenefitFarCurve]:
    """Benefit-FAR curve per detector from trace records."""
    if detectors is None:
        names = sorted({name for rec in records for name in rec.scores})
    else:
        names = list(detectors)
    times = np.array([rec.t for rec in records])
    out = {}
    for name in names:
        scores = np.array([rec.scores.get(name, math.nan) for rec in records])
        out[name] = benefit_far_auc(times, scores, config)
    return out


def aggregate_aucs(per_trial: list[dict[str, BenefitFarCurve]]) -> dict[str, tuple[float, float]]:
    """Mean and std of AUC per detector across trials."""
    names = sorted({name for trial in per_trial for name in trial})
    out = {}
    for name in names:
        values = [trial[name].auc for trial in per_trial if name in trial]
        out[name] = (float(np.mean(values)), float(np.std(values)))
    return out
