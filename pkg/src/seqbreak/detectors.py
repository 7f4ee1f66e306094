"""Fluctuation detectors over the monitoring period.

Every detector is normalised by ``sqrt(n)`` where ``n`` is the number of
historical regression rows, and monitoring step ``k`` sits at clock time
``t_k = 1 + k/n``. Two forms are provided: a batch path over a whole design
(vectorised kernels, used by the Monte Carlo engine) and a streaming
:class:`DetectorState` fed one observation at a time. Both give the same
numbers.
"""
from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from . import _kernels
from .linreg import Design, EstimationError, FitResult, ols_fit

EXACT_FIT_TOL = 1e-10


class DetectorKind(str, Enum):
    RE = "re"
    ME = "me"
    OLS_CUSUM = "ols-cusum"
    OLS_MOSUM = "ols-mosum"
    OLS_CUSUM_SQ = "ols-cusum-sq"

    @classmethod
    def parse(cls, name: "str | DetectorKind") -> "DetectorKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown detector {name!r}; expected one of {[k.value for k in cls]}") from None


@dataclass(frozen=True)
class DetectorSpec:
    """Detector configuration.

    Attributes
    ----------
    kind : DetectorKind
    h : float
        Window fraction for ME and OLS-MOSUM; the window holds ``floor(n*h)`` rows.
    rescale : bool
        RE/ME: use the moment matrix of the current sample (RE) or window (ME)
        instead of the historical one.
    norm : {"max", "euclid"}
        Vector reduction for RE/ME.
    mosum_time_factor : bool
        Multiply OLS-MOSUM by ``t`` (the printed prefactor) instead of 1.
    cusum_sq_printed : bool
        Centre squared residuals at the squared historical mean square
        rather than at the mean square itself.
    """

    kind: DetectorKind = DetectorKind.OLS_CUSUM
    h: float = 0.5
    rescale: bool = False
    norm: str = "max"
    mosum_time_factor: bool = False
    cusum_sq_printed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", DetectorKind.parse(self.kind))
        if not 0 < self.h <= 1:
            raise ValueError(f"h must lie in (0, 1], got {self.h}")
        if self.norm not in ("max", "euclid"):
            raise ValueError(f"norm must be 'max' or 'euclid', got {self.norm!r}")

    def window(self, n: int) -> int:
        return max(int(math.floor(n * self.h)), 1)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value, "h": self.h, "rescale": self.rescale, "norm": self.norm,
            "mosum_time_factor": self.mosum_time_factor, "cusum_sq_printed": self.cusum_sq_printed,
        }


@dataclass(frozen=True)
class Historical:
    """Quantities frozen at the end of the historical period."""

    fit: FitResult
    n: int
    sq_center: float
    sq_scale: float

    @classmethod
    def from_design(cls, design: Design, n: int, printed_sq: bool = False) -> "Historical":
        fit = ols_fit(design.subset(0, n))
        if fit.sigma_hat <= EXACT_FIT_TOL * max(float(np.max(np.abs(design.y[:n]))), 1.0):
            # an exact historical fit leaves only rounding noise; treat it as zero scale
            fit = replace(fit, sigma_hat=0.0)
            return cls(fit=fit, n=n, sq_center=0.0, sq_scale=0.0)
        e2 = fit.residuals**2
        m = float(e2.mean())
        return cls(fit=fit, n=n, sq_center=m * m if printed_sq else m, sq_scale=float(e2.std(ddof=1)))


@dataclass
class DetectorPath:
    """Detector statistic per monitoring step with the aligned boundary.

    ``values`` holds the signed statistic for the residual-based kinds and
    the norm for RE/ME; ``statistic`` is what gets compared with the
    boundary (absolute value). Inactive steps (MOSUM warm-up) are NaN.
    """

    times: np.ndarray
    values: np.ndarray
    boundary_values: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        if self.boundary_values.size == 0:
            self.boundary_values = np.full(self.times.shape, np.inf)
        if not (self.times.shape == self.values.shape == self.boundary_values.shape):
            raise ValueError("times, values and boundary_values must have equal length")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.size

    @property
    def statistic(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def active(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def crossed(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return self.active & (self.statistic >= self.boundary_values)

    def truncate(self, steps: int) -> "DetectorPath":
        return DetectorPath(self.times[:steps], self.values[:steps], self.boundary_values[:steps])

    def to_csv(self, path: str | Path, labels: list[str] | None = None) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            head = ["k", "time", "value", "boundary", "crossed"]
            w.writerow(head + (["label"] if labels is not None else []))
            crossed = self.crossed
            for i in range(len(self)):
                row = [i + 1, repr(float(self.times[i])), repr(float(self.values[i])),
                       repr(float(self.boundary_values[i])), int(crossed[i])]
                if labels is not None:
                    row.append(labels[i])
                w.writerow(row)


# ----------------------------------------------------------------------------
# Batch paths
# ----------------------------------------------------------------------------

def monitoring_residuals(design: Design, hist: Historical) -> np.ndarray:
    """Residuals of the monitoring rows under the frozen historical coefficients."""
    mon = design.subset(hist.n, design.rows)
    return mon.y - mon.X @ hist.fit.beta


def detector_values(
    design: Design,
    n: int,
    spec: DetectorSpec,
    hist: Historical | None = None,
    numba: bool | None = None,
) -> np.ndarray:
    """Detector values for monitoring steps ``k = 1 .. design.rows - n``.

    Rows ``[0, n)`` are the historical sample. Raises
    :class:`~seqbreak.linreg.EstimationError` if the historical fit is
    degenerate (zero residual scale) or an updated design is singular.
    """
    if n >= design.rows:
        raise ValueError("no monitoring rows after the historical sample")
    hist = hist or Historical.from_design(design, n, spec.cusum_sq_printed)
    sigma = hist.fit.sigma_hat
    kind = spec.kind
    euclid = spec.norm == "euclid"
    if kind in (DetectorKind.RE, DetectorKind.ME):
        if not sigma > 0:
            raise EstimationError("historical residual scale is zero")
        if kind is DetectorKind.RE:
            _check_prefix(design, n)
            return _kernels.re_path(design.X, design.y, n, hist.fit.beta, hist.fit.moment, sigma,
                                    spec.rescale, euclid, numba=numba)
        w = spec.window(n)
        if w < design.p + 1:
            raise ValueError(f"window of {w} rows cannot identify {design.p} coefficients")
        return _kernels.me_path(design.X, design.y, n, w, hist.fit.beta, hist.fit.moment, sigma,
                                spec.rescale, euclid, numba=numba)

    resid = monitoring_residuals(design, hist)
    root_n = math.sqrt(n)
    if kind is DetectorKind.OLS_CUSUM_SQ:
        if not hist.sq_scale > 0:
            raise EstimationError("historical squared residuals have zero spread")
        return np.cumsum(resid**2 - hist.sq_center) / (root_n * hist.sq_scale)
    if not sigma > 0:
        raise EstimationError("historical residual scale is zero")
    cusum = np.cumsum(resid) / (sigma * root_n)
    if kind is DetectorKind.OLS_CUSUM:
        return cusum
    w = spec.window(n)
    out = np.full(cusum.shape, np.nan)
    if w <= cusum.size:
        lagged = np.concatenate([[0.0], cusum[:-w]]) if w < cusum.size else np.array([0.0])
        out[w - 1:] = cusum[w - 1:] - lagged[: cusum.size - w + 1]
    if spec.mosum_time_factor:
        out *= 1.0 + np.arange(1, cusum.size + 1) / n
    return out


def _check_prefix(design: Design, n: int) -> None:
    """Fail early if an expanding sample turns singular (only possible if the history is)."""
    A = design.X[:n].T @ design.X[:n]
    w = np.linalg.eigvalsh(A)
    if w[0] <= 1e-12 * w[-1]:
        raise EstimationError("historical design is singular", index=n)


def clock(n: int, steps: int) -> np.ndarray:
    return 1.0 + np.arange(1, steps + 1) / n


# ----------------------------------------------------------------------------
# Streaming state
# ----------------------------------------------------------------------------

class DetectorState:
    """Single-stream detector updated one observation at a time.

    Parameters
    ----------
    historical : Design
        The ``n`` historical rows; the model is fitted on them once.
    spec : DetectorSpec

    ``step(x, y)`` consumes the regressor row and response of the next
    monitoring observation and returns the detector value, or None while a
    moving window is still warming up.
    """

    def __init__(self, historical: Design, spec: DetectorSpec):
        self.spec = spec
        self.n = historical.rows
        self.hist = Historical.from_design(historical, self.n, spec.cusum_sq_printed)
        self.k = 0
        p = historical.p
        self._A = historical.X.T @ historical.X
        self._b = historical.X.T @ historical.y
        self._root_hist = _kernels._sym_sqrt_np(self.hist.fit.moment)
        self._cusum = 0.0
        self._cusum_sq = 0.0
        self._resid_window: deque[float] = deque()
        w = spec.window(self.n)
        self._rows: deque[tuple[np.ndarray, float]] = deque(
            (historical.X[i].copy(), float(historical.y[i])) for i in range(max(self.n - w, 0), self.n)
        )
        self._p = p

    @property
    def time(self) -> float:
        return 1.0 + self.k / self.n

    def _reduce(self, v: np.ndarray) -> float:
        return float(np.sqrt(v @ v)) if self.spec.norm == "euclid" else float(np.max(np.abs(v)))

    def re_step(self, x: np.ndarray, y: float) -> float:
        self.k += 1
        self._A += np.outer(x, x)
        self._b += x * y
        m = self.n + self.k
        try:
            beta_m = np.linalg.solve(self._A, self._b)
        except np.linalg.LinAlgError as exc:
            raise EstimationError(f"singular updated design at k={self.k}", index=self.k) from exc
        root = _kernels._sym_sqrt_np(self._A / m) if self.spec.rescale else self._root_hist
        scale = m / (self.hist.fit.sigma_hat * math.sqrt(self.n))
        return scale * self._reduce(root @ (beta_m - self.hist.fit.beta))

    def me_step(self, x: np.ndarray, y: float) -> float:
        self.k += 1
        w = self.spec.window(self.n)
        self._rows.append((np.asarray(x, dtype=np.float64), float(y)))
        while len(self._rows) > w:
            self._rows.popleft()
        Xw = np.array([r[0] for r in self._rows])
        yw = np.array([r[1] for r in self._rows])
        A = Xw.T @ Xw
        try:
            beta_w = np.linalg.solve(A, Xw.T @ yw)
        except np.linalg.LinAlgError as exc:
            raise EstimationError(f"singular window at k={self.k}", index=self.k) from exc
        root = _kernels._sym_sqrt_np(A / w) if self.spec.rescale else self._root_hist
        scale = w / (self.hist.fit.sigma_hat * math.sqrt(self.n))
        return scale * self._reduce(root @ (beta_w - self.hist.fit.beta))

    def _resid(self, x: np.ndarray, y: float) -> float:
        return float(y - np.asarray(x) @ self.hist.fit.beta)

    def cusum_step(self, x: np.ndarray, y: float) -> float:
        """Signed CUSUM value; compare its absolute value with the boundary."""
        if not self.hist.fit.sigma_hat > 0:
            raise EstimationError("historical residual scale is zero")
        self.k += 1
        self._cusum += self._resid(x, y)
        return self._cusum / (self.hist.fit.sigma_hat * math.sqrt(self.n))

    def mosum_step(self, x: np.ndarray, y: float) -> float | None:
        if not self.hist.fit.sigma_hat > 0:
            raise EstimationError("historical residual scale is zero")
        self.k += 1
        w = self.spec.window(self.n)
        self._resid_window.append(self._resid(x, y))
        if len(self._resid_window) > w:
            self._resid_window.popleft()
        if len(self._resid_window) < w:
            return None
        val = math.fsum(self._resid_window) / (self.hist.fit.sigma_hat * math.sqrt(self.n))
        return val * self.time if self.spec.mosum_time_factor else val

    def cusum_sq_step(self, x: np.ndarray, y: float) -> float:
        if not self.hist.sq_scale > 0:
            raise EstimationError("historical squared residuals have zero spread")
        self.k += 1
        self._cusum_sq += self._resid(x, y) ** 2 - self.hist.sq_center
        return self._cusum_sq / (math.sqrt(self.n) * self.hist.sq_scale)

    def step(self, x: np.ndarray, y: float) -> float | None:
        kind = self.spec.kind
        x = np.asarray(x, dtype=np.float64)
        if kind is DetectorKind.RE:
            return self.re_step(x, y)
        if kind is DetectorKind.ME:
            return self.me_step(x, y)
        if kind is DetectorKind.OLS_CUSUM:
            return self.cusum_step(x, y)
        if kind is DetectorKind.OLS_MOSUM:
            return self.mosum_step(x, y)
        return self.cusum_sq_step(x, y)
