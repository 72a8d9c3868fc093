"""AR(k) order estimation with sequential NML codelengths.

Each point in a window is coded with the predictive-NML term

    -ln [ p(x_j; theta_hat(x_j, x^{j-1})) / Int p(y; theta_hat(y, x^{j-1})) dy ],

where theta_hat refits the AR(k) least squares including the candidate point.
Because the Gram matrix including the new point does not depend on the
candidate value y, the refit is a rank-one update: the coefficient vector is
linear in y and the residual sum of squares is quadratic in y, so the
integrand is closed-form per y and the normalizer is a 1-D quadrature.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import InsufficientDataError, NumericError

_VAR_FLOOR = 1e-12
_RIDGE = 1e-8


@dataclass(frozen=True)
class ArModel:
    order: int
    coefficients: np.ndarray
    noise_variance: float


def ar_mle(history: np.ndarray, k: int) -> ArModel:
    """Least-squares AR(k) fit; noise variance is the mean squared residual."""
    x = np.asarray(history, dtype=float)
    if len(x) < k + 2:
        raise InsufficientDataError(f"need at least k+2 = {k + 2} points for AR({k}), got {len(x)}")
    Phi = _lag_matrix(x, k)
    y = x[k:]
    A = Phi.T @ Phi
    b = Phi.T @ y
    try:
        coeffs = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        coeffs = np.linalg.solve(A + _RIDGE * np.eye(k), b)
    resid = y - Phi @ coeffs
    sigma2 = max(float(np.mean(resid**2)), _VAR_FLOOR)
    return ArModel(order=k, coefficients=coeffs, noise_variance=sigma2)


def _lag_matrix(x: np.ndarray, k: int) -> np.ndarray:
    """Row j holds (x_{j-1}, ..., x_{j-k}) for targets x_k..x_{end}."""
    n = len(x)
    return np.column_stack([x[k - i - 1 : n - i - 1] for i in range(k)])


def is_stable(coefficients: np.ndarray) -> bool:
    """Companion-matrix spectral radius < 1."""
    a = np.asarray(coefficients, dtype=float)
    k = len(a)
    if k == 0:
        return True
    comp = np.zeros((k, k))
    comp[0] = a
    if k > 1:
        comp[1:, :-1] = np.eye(k - 1)
    return bool(np.max(np.abs(np.linalg.eigvals(comp))) < 1.0)


def _solve(A: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return np.linalg.solve(A + _RIDGE * np.eye(A.shape[0]), rhs)


@dataclass(frozen=True)
class _PointCoder:
    """Closed-form SNML integrand for one point given the running statistics.

    prediction(y) = p0 + p1 y, RSS(y) = q0 + q1 y + q2 y^2, fit size N.
    """

    p0: float
    p1: float
    q0: float
    q1: float
    q2: float
    N: int

    def log_density(self, y):
        sigma2 = np.maximum((self.q0 + self.q1 * y + self.q2 * y * y) / self.N, _VAR_FLOOR)
        resid = y - (self.p0 + self.p1 * y)
        return -0.5 * (np.log(2.0 * np.pi * sigma2) + resid * resid / sigma2)

    def density(self, y):
        return np.exp(self.log_density(y))


def _point_coder(A: np.ndarray, b: np.ndarray, sxx: float, count: int, phi: np.ndarray) -> _PointCoder:
    """Rank-one refit coefficients for a new point with lag vector phi.

    A, b, sxx summarize the `count` targets fitted so far; the fit including
    the candidate y has A_t = A + phi phi', b_t = b + phi y, so the LS solution
    is c0 + c1 y and RSS(y) = sxx + y^2 - b_t(y)' (c0 + c1 y).
    """
    A_t = A + np.outer(phi, phi)
    c0 = _solve(A_t, b)
    c1 = _solve(A_t, phi)
    q0 = sxx - float(b @ c0)
    q1 = -(float(b @ c1) + float(phi @ c0))
    q2 = 1.0 - float(phi @ c1)
    return _PointCoder(
        p0=float(phi @ c0),
        p1=float(phi @ c1),
        q0=q0,
        q1=q1,
        q2=max(q2, 0.0),
        N=count + 1,
    )


def _log_normalizer(coder: _PointCoder, center: float, scale: float, rtol: float) -> float:
    """log Int density(y) dy over [center - 10 scale, center + 10 scale],
    widened once to 20 scale on non-convergence."""
    for half_width in (10.0 * scale, 20.0 * scale):
        lo, hi = center - half_width, center + half_width
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            try:
                value, _ = quad(coder.density, lo, hi, epsrel=rtol, limit=200)
            except Warning:
                continue
        if value > 0 and math.isfinite(value):
            return math.log(value)
    raise NumericError("SNML normalizer quadrature did not converge")


def sequential_nml_ar(
    series: np.ndarray,
    start: int,
    end: int,
    k: int,
    *,
    quad_rtol: float = 1e-6,
    min_fit_points: int | None = None,
    fit_start: int | None = None,
) -> float:
    """Sum of per-point sequential NML codelengths (nats) for indices
    [start, end) of `series` under AR(k).

    Fit statistics accumulate targets from `fit_start` on (default: the
    window start, so each session's coding restarts and adapts to the local
    regime); lag vectors may reach before `fit_start`.  Points with fewer
    than `min_fit_points` (default k+2) previously fitted targets are
    skipped as burn-in.
    """
    x = np.asarray(series, dtype=float)
    if not (0 <= start <= end <= len(x)):
        raise ValueError(f"window [{start}, {end}) outside series of length {len(x)}")
    if k < 1:
        raise ValueError(f"order must be >= 1, got {k}")
    min_fit = k + 2 if min_fit_points is None else min_fit_points
    if fit_start is None:
        fit_start = start

    first_target = max(fit_start, k)
    # running statistics over fitted targets before the window
    hist_end = max(start, first_target)
    if hist_end > first_target:
        Phi = _lag_matrix(x[:hist_end], k)[first_target - k :]
        y_hist = x[first_target:hist_end]
    else:
        Phi = np.zeros((0, k))
        y_hist = np.zeros(0)
    A = Phi.T @ Phi
    b = Phi.T @ y_hist
    sxx = float(y_hist @ y_hist)
    count = len(y_hist)

    # running mean/std of the observed series up to j (quadrature range)
    run_sum = float(np.sum(x[:hist_end]))
    run_sq = float(np.sum(x[:hist_end] ** 2))
    run_n = hist_end

    total = 0.0
    for j in range(hist_end, len(x)):
        if j >= end:
            break
        phi = x[j - 1 : j - 1 - k : -1] if j - k > 0 else x[j - 1 :: -1][:k]
        xj = float(x[j])
        if j >= start and count >= min_fit:
            coder = _point_coder(A, b, sxx, count, phi)
            center = run_sum / run_n if run_n else 0.0
            var = max(run_sq / run_n - center * center, _VAR_FLOOR) if run_n else 1.0
            scale = max(math.sqrt(var), 1e-6)
            log_norm = _log_normalizer(coder, center, scale, quad_rtol)
            total += log_norm - float(coder.log_density(xj))
        # fold the realized point into the running fit
        A += np.outer(phi, phi)
        b += phi * xj
        sxx += xj * xj
        count += 1
        run_sum += xj
        run_sq += xj * xj
        run_n += 1
    return total


def ar_codelengths(
    series: np.ndarray,
    start: int,
    end: int,
    K: int,
    *,
    quad_rtol: float = 1e-6,
) -> np.ndarray:
    """Sequential NML codelength of the window for each order k = 1..K.

    Every order codes exactly the same points: coding begins once the largest
    order has both its lags and K+2 fitted targets, which keeps the per-order
    sums comparable.
    """
    common_start = max(start, max(start, K) + K + 2)
    return np.array(
        [
            sequential_nml_ar(series, common_start, end, k, quad_rtol=quad_rtol, fit_start=start)
            for k in range(1, K + 1)
        ]
    )
