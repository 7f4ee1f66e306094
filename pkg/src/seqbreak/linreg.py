"""OLS estimation substrate: designs, fits, HAC covariance, recursive and window estimates."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _kernels
from .timeseries import TimeSeries

RCOND_MIN = 1e-12
MONTHLY_HAC_LAGS = 12


class EstimationError(np.linalg.LinAlgError):
    """Singular or ill-conditioned least-squares problem."""

    def __init__(self, message: str, rcond: float | None = None, index: int | None = None):
        super().__init__(message)
        self.rcond = rcond
        self.index = index


@dataclass(frozen=True)
class Design:
    """Regressor rows ``X`` (first column the intercept) and aligned response ``y``."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} rows but {y.shape[0]} responses")
        if X.shape[1] < 1:
            raise ValueError("design needs at least one regressor")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def rows(self) -> int:
        return self.X.shape[0]

    def subset(self, start: int, stop: int) -> "Design":
        return Design(self.X[start:stop], self.y[start:stop])


@dataclass(frozen=True)
class FitResult:
    beta: np.ndarray
    residuals: np.ndarray
    sigma_hat: float
    moment: np.ndarray
    hac: np.ndarray | None = None
    rcond: float = field(default=float("nan"), compare=False)

    @property
    def nobs(self) -> int:
        return self.residuals.size

    def with_hac(self, hac: np.ndarray) -> "FitResult":
        return FitResult(self.beta, self.residuals, self.sigma_hat, self.moment, hac, self.rcond)


def ar1_design(series: TimeSeries | np.ndarray, start: int = 0, stop: int | None = None) -> Design:
    """Rows ``(1, y[t-1])`` with response ``y[t]`` for t in ``[start+1, stop)``.

    The first point of the range only serves as the lag, so a range of
    length L gives L - 1 rows.
    """
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=np.float64)
    stop = values.size if stop is None else stop
    seg = values[start:stop]
    if seg.size < 3:
        raise ValueError(f"AR(1) design needs at least 3 points, got {seg.size}")
    X = np.column_stack([np.ones(seg.size - 1), seg[:-1]])
    return Design(X, seg[1:])


def mean_design(series: TimeSeries | np.ndarray, start: int = 0, stop: int | None = None) -> Design:
    """Intercept-only design over ``[start, stop)``."""
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=np.float64)
    seg = values[start:stop]
    if seg.size < 2:
        raise ValueError("mean design needs at least 2 points")
    return Design(np.ones((seg.size, 1)), seg)


def _solve_ls(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    Q, R = np.linalg.qr(X)
    sv = np.linalg.svd(R, compute_uv=False)
    rcond = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
    if rcond < RCOND_MIN:
        raise EstimationError(f"ill-conditioned design (reciprocal condition {rcond:.3e})", rcond=rcond)
    return np.linalg.solve(R, Q.T @ y), rcond


def ols_fit(design: Design) -> FitResult:
    """Least squares via QR; ``sigma_hat**2`` uses ``rows - p`` degrees of freedom."""
    n, p = design.X.shape
    if n <= p:
        raise EstimationError(f"{n} rows cannot identify {p} coefficients")
    beta, rcond = _solve_ls(design.X, design.y)
    resid = design.y - design.X @ beta
    sigma = float(np.sqrt(resid @ resid / (n - p)))
    moment = design.X.T @ design.X / n
    return FitResult(beta, resid, sigma, moment, None, rcond)


def hac_covariance(design: Design, fit: FitResult, lags: int = MONTHLY_HAC_LAGS) -> np.ndarray:
    """Newey-West covariance of the coefficients with Bartlett weights.

    ``lags=0`` is the White (HC0) sandwich.
    """
    n = design.rows
    if not 0 <= lags < n:
        raise ValueError(f"lags must be in [0, {n - 1}], got {lags}")
    u = design.X * fit.residuals[:, None]
    S = u.T @ u
    for j in range(1, lags + 1):
        g = u[j:].T @ u[:-j]
        S += (1.0 - j / (lags + 1.0)) * (g + g.T)
    bread = np.linalg.solve(design.X.T @ design.X, np.eye(design.p))
    V = bread @ S @ bread
    return 0.5 * (V + V.T)


def default_hac_lags(frequency: str, rows: int | None = None) -> int:
    """12 lags for monthly data. Other frequencies also get 12, capped below ``rows``."""
    lags = MONTHLY_HAC_LAGS
    if rows is not None:
        lags = min(lags, rows - 1)
    return lags


def fit_summary(design: Design, fit: FitResult, lags: int) -> dict:
    """Estimates, HAC standard errors and normal-approximation p-values."""
    cov = fit.hac if fit.hac is not None else hac_covariance(design, fit, lags)
    se = np.sqrt(np.diag(cov))
    z = fit.beta / se
    pvals = 2.0 * stats.norm.sf(np.abs(z))
    return {
        "beta": fit.beta.tolist(),
        "hac_se": se.tolist(),
        "z": z.tolist(),
        "p_value": pvals.tolist(),
        "sigma_hat": fit.sigma_hat,
        "nobs": fit.nobs,
        "hac_lags": lags,
    }


def recursive_estimates(design: Design, start: int, numba: bool | None = None) -> np.ndarray:
    """Coefficients fitted on the first j rows, j = start .. rows (one row per j).

    Sums of ``x x'`` and ``x y`` are accumulated one row at a time and each
    prefix is solved afresh; prefixes are checked for conditioning first.
    """
    p = design.p
    if start < p + 1:
        raise ValueError(f"start must be >= p+1 = {p + 1}")
    if start > design.rows:
        raise ValueError(f"start {start} exceeds {design.rows} rows")
    X = design.X
    # flag the first badly conditioned prefix before handing over to the kernel
    A = np.cumsum(X[:, :, None] * X[:, None, :], axis=0)[start - 1:]
    w = np.linalg.eigvalsh(A)
    bad = np.flatnonzero(w[:, 0] <= RCOND_MIN * w[:, -1])
    if bad.size:
        j = int(bad[0]) + start
        raise EstimationError(f"singular design on the first {j} rows", index=j)
    return _kernels.recursive_betas(X, design.y, start, numba=numba)


def window_estimate(design: Design, start: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """OLS on rows ``[start, start+width)`` and that window's moment matrix."""
    if width < design.p + 1:
        raise ValueError(f"window width must be >= p+1 = {design.p + 1}")
    if start < 0 or start + width > design.rows:
        raise ValueError("window exceeds the design")
    sub = design.subset(start, start + width)
    beta, _ = _solve_ls(sub.X, sub.y)
    return beta, sub.X.T @ sub.X / width
