"""Gaussian quasi-maximum-likelihood GARCH(1,1) and AR(1)-GARCH(1,1)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from . import _kernels
from .timeseries import DataError, TimeSeries

MIN_LENGTH = 50
XATOL = 1e-6
MAX_EVALS = 2000
RESTARTS = 3
UNIT_ROOT_WARN = 0.999
_LOG2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GarchParams:
    """Mean and variance parameters; ``rho`` is None for the pure GARCH mean."""

    mu: float
    omega: float
    alpha: float
    beta: float
    rho: float | None = None

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if not self.alpha + self.beta < 1:
            raise ValueError(f"alpha + beta = {self.alpha + self.beta} violates stationarity")

    @property
    def persistence(self) -> float:
        return self.alpha + self.beta

    def as_dict(self) -> dict:
        out = {"mu": self.mu, "omega": self.omega, "alpha": self.alpha, "beta": self.beta}
        if self.rho is not None:
            out["rho"] = self.rho
        return out


@dataclass(frozen=True)
class GarchFit:
    params: GarchParams
    loglik: float
    std_residuals: np.ndarray
    cond_var: np.ndarray
    converged: bool
    robust_se: dict
    near_unit_root: bool = False
    start_loglik: float = float("nan")
    nfev: int = 0
    sigma2_init: float = float("nan")
    labels: tuple[str, ...] | None = field(default=None, repr=False)
    frequency: str = "untagged"


def _mean_residuals(y: np.ndarray, mu: float, rho: float | None) -> np.ndarray:
    if rho is None:
        return y - mu
    return y[1:] - mu - rho * y[:-1]


def _unpack(theta: np.ndarray, with_ar: bool) -> tuple[float, float | None, float, float, float]:
    mu = theta[0]
    rho = theta[1] if with_ar else None
    a, b, c = theta[-3:]
    s = expit(c)
    omega = math.exp(min(a, 700.0))
    alpha = s * expit(b)
    beta = s * (1.0 - expit(b))
    return mu, rho, omega, alpha, beta


def _pack(mu, rho, omega, alpha, beta) -> np.ndarray:
    s = alpha + beta
    head = [mu] if rho is None else [mu, rho]
    return np.array(head + [math.log(omega), logit(alpha / s), logit(s)])


def _obs_loglik(eps: np.ndarray, omega: float, alpha: float, beta: float, h1: float) -> tuple[np.ndarray, np.ndarray]:
    h = _kernels.garch_variance(eps, omega, alpha, beta, h1)
    return -0.5 * (_LOG2PI + np.log(h) + eps * eps / h), h


def _initial_variance(y: np.ndarray, with_ar: bool) -> float:
    """Sample variance of the demeaned data (OLS residuals when an AR term is present)."""
    if with_ar:
        X = np.column_stack([np.ones(y.size - 1), y[:-1]])
        coef = np.linalg.lstsq(X, y[1:], rcond=None)[0]
        r = y[1:] - X @ coef
        return float(r @ r / r.size)
    return float(np.var(y))


def garch_filter(
    series: TimeSeries | np.ndarray,
    params: GarchParams,
    sigma2_init: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Mean residuals and conditional variances for fixed ``params``.

    With ``params.rho`` set the first observation is used as the lag only,
    so both outputs have length ``len(series) - 1``.
    """
    y = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=np.float64)
    eps = _mean_residuals(y, params.mu, params.rho)
    h1 = _initial_variance(y, params.rho is not None) if sigma2_init is None else float(sigma2_init)
    h = _kernels.garch_variance(eps, params.omega, params.alpha, params.beta, h1)
    return eps, h


def _robust_se(y, natural, with_ar, h1) -> dict:
    """Sandwich standard errors in the natural parameterisation.

    Per-observation scores and the Hessian both come from central
    differences of the per-observation log-likelihood.
    """
    k = natural.size
    names = ["mu", "rho", "omega", "alpha", "beta"] if with_ar else ["mu", "omega", "alpha", "beta"]

    def contrib(v):
        mu, *rest = v
        rho = rest[0] if with_ar else None
        omega, alpha, beta = rest[-3:]
        eps = _mean_residuals(y, mu, rho)
        return _obs_loglik(eps, max(omega, 1e-300), alpha, beta, h1)[0]

    steps = 1e-4 * np.maximum(np.abs(natural), 1e-2)
    scores = np.empty((contrib(natural).size, k))
    for i in range(k):
        e = np.zeros(k)
        e[i] = steps[i]
        scores[:, i] = (contrib(natural + e) - contrib(natural - e)) / (2 * steps[i])
    H = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = steps[i]
            ej[j] = steps[j]
            f = (
                contrib(natural + ei + ej).sum()
                - contrib(natural + ei - ej).sum()
                - contrib(natural - ei + ej).sum()
                + contrib(natural - ei - ej).sum()
            )
            H[i, j] = H[j, i] = f / (4 * steps[i] * steps[j])
    try:
        Hinv = np.linalg.inv(H)
        cov = Hinv @ (scores.T @ scores) @ Hinv
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        se = np.full(k, np.nan)
    return dict(zip(names, se.tolist()))


def garch_fit(series: TimeSeries | np.ndarray, with_ar: bool = False) -> GarchFit:
    """Fit by Nelder-Mead on an unconstrained reparameterisation.

    ``omega = exp(a)``, ``alpha = s*sigmoid(b)``, ``beta = s*(1 - sigmoid(b))``
    with ``s = sigmoid(c)`` keeps every iterate inside the stationarity region.
    The search is restarted from its best point (at most ``RESTARTS`` times)
    while the simplex still moves; ``converged`` is True once a run stops on
    the ``XATOL`` tolerance rather than the evaluation budget.
    """
    ts = series if isinstance(series, TimeSeries) else TimeSeries(series)
    y = ts.values
    if y.size < MIN_LENGTH:
        raise DataError(f"GARCH fit needs at least {MIN_LENGTH} observations, got {y.size}")
    h1 = _initial_variance(y, with_ar)
    if not h1 > 0:
        raise DataError("degenerate series: zero sample variance")

    if with_ar:
        X = np.column_stack([np.ones(y.size - 1), y[:-1]])
        mu0, rho0 = np.linalg.lstsq(X, y[1:], rcond=None)[0]
        rho0 = float(np.clip(rho0, -0.99, 0.99))
    else:
        mu0, rho0 = float(np.mean(y)), None
    theta0 = _pack(float(mu0), rho0, 0.15 * h1, 0.05, 0.80)

    def negll(theta):
        mu, rho, omega, alpha, beta = _unpack(theta, with_ar)
        eps = _mean_residuals(y, mu, rho)
        val = -_obs_loglik(eps, omega, alpha, beta, h1)[0].sum()
        return val if np.isfinite(val) else 1e300

    start_ll = -negll(theta0)
    theta, nfev, converged = theta0, 0, False
    for _ in range(RESTARTS):
        res = minimize(
            negll, theta, method="Nelder-Mead",
            options={"xatol": XATOL, "fatol": 1e-9, "maxfev": MAX_EVALS, "adaptive": theta.size > 4},
        )
        nfev += res.nfev
        moved = np.max(np.abs(res.x - theta))
        if res.fun <= negll(theta):
            theta = res.x
        converged = bool(res.success)
        if converged and moved < 10 * XATOL:
            break

    mu, rho, omega, alpha, beta = _unpack(theta, with_ar)
    params = GarchParams(mu=float(mu), omega=float(omega), alpha=float(alpha), beta=float(beta),
                         rho=None if rho is None else float(rho))
    eps, h = garch_filter(y, params, sigma2_init=h1)
    loglik = float(-negll(theta))
    natural = np.array(([mu, rho] if with_ar else [mu]) + [omega, alpha, beta], dtype=np.float64)
    se = _robust_se(y, natural, with_ar, h1)
    labels = None
    if ts.labels is not None:
        labels = ts.labels[1:] if with_ar else ts.labels
    return GarchFit(
        params=params,
        loglik=loglik,
        std_residuals=eps / np.sqrt(h),
        cond_var=h,
        converged=converged,
        robust_se=se,
        near_unit_root=alpha + beta > UNIT_ROOT_WARN,
        start_loglik=float(start_ll),
        nfev=int(nfev),
        sigma2_init=h1,
        labels=labels,
        frequency=ts.frequency,
    )


def standardized_residuals(fit: GarchFit, allow_unconverged: bool = False) -> TimeSeries:
    """``eps / sqrt(h)`` as a series, labels aligned with the residuals."""
    if not fit.converged and not allow_unconverged:
        raise ValueError("GARCH fit did not converge; pass allow_unconverged=True to use it anyway")
    return TimeSeries(fit.std_residuals, fit.frequency, fit.labels)


def fit_report(fit: GarchFit) -> dict:
    """JSON-ready summary for the command line."""
    return {
        "params": fit.params.as_dict(),
        "robust_se": fit.robust_se,
        "loglik": fit.loglik,
        "converged": fit.converged,
        "near_unit_root": fit.near_unit_root,
        "nfev": fit.nfev,
        "sigma2_init": fit.sigma2_init,
    }
