"""Retrospective break estimation on a complete sample.

Breakpoints are reported as observation counts: a breakpoint ``k`` means the
first regime ends with observation ``k`` (1-based) and the next one starts
at ``k + 1``. Segments are half-open row ranges ``[i, j)`` internally.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .detectors import DetectorPath
from .linreg import Design, EstimationError, FitResult, ar1_design, mean_design, ols_fit
from .timeseries import TimeSeries

F_CAP = 1e12
DESIGN_KINDS = ("mean", "ar1")


@dataclass(frozen=True)
class BreakEstimate:
    breakpoints: tuple[int, ...]
    ssr: float
    per_regime: tuple[FitResult | None, ...]
    labels: tuple[str | None, ...] = ()

    @property
    def n_breaks(self) -> int:
        return len(self.breakpoints)

    def as_dict(self) -> dict:
        regimes = []
        for fit in self.per_regime:
            regimes.append(None if fit is None else {"beta": fit.beta.tolist(), "sigma_hat": fit.sigma_hat,
                                                     "nobs": fit.nobs})
        return {"breakpoints": list(self.breakpoints), "labels": list(self.labels), "ssr": self.ssr,
                "regimes": regimes}


def _values(series) -> np.ndarray:
    return series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=np.float64)


def _design(series, kind: str) -> tuple[Design, int]:
    """Design and the number of leading observations it consumes."""
    vals = _values(series)
    if kind == "mean":
        return mean_design(vals), 0
    if kind == "ar1":
        return ar1_design(vals), 1
    raise ValueError(f"design_kind must be one of {DESIGN_KINDS}, got {kind!r}")


def _segment_fits(design: Design, cuts: list[int]) -> tuple[FitResult | None, ...]:
    bounds = [0, *cuts, design.rows]
    fits = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        try:
            fits.append(ols_fit(design.subset(a, b)))
        except EstimationError:
            fits.append(None)
    return tuple(fits)


def _labels(series, points) -> tuple[str | None, ...]:
    if isinstance(series, TimeSeries) and series.labels is not None:
        return tuple(series.labels[k - 1] for k in points)
    return tuple(None for _ in points)


def single_break_ls(series: TimeSeries | np.ndarray) -> BreakEstimate:
    """Least-squares single mean shift: ``argmin_k S(k)`` over ``k = 1 .. N-1``.

    ``S(k)`` comes from running sums in one pass; the smallest ``k`` wins ties.
    """
    y = _values(series)
    if y.size < 4:
        raise ValueError("single break estimation needs at least 4 observations")
    s = _kernels.two_segment_ssr(y)
    k = int(np.argmin(s)) + 1
    fits = _segment_fits(mean_design(y), [k])
    return BreakEstimate((k,), float(s[k - 1]), fits, _labels(series, [k]))


def min_segment(rows: int, trim: float, p: int) -> int:
    h = math.ceil(round(trim * rows, 9))
    if trim * rows < p + 2 or h < p + 1:
        raise ValueError(f"trim {trim} leaves segments of {h} rows; need trim*N >= p+2 = {p + 2}")
    return h


def bai_perron(
    series: TimeSeries | np.ndarray,
    max_breaks: int = 3,
    trim: float = 0.15,
    design_kind: str = "mean",
    numba: bool | None = None,
) -> list[BreakEstimate]:
    """Global SSR-minimising partitions with ``1 .. max_breaks`` breaks.

    Every segment holds at least ``ceil(trim * N)`` regression rows and both
    coefficients are refitted per regime for the ``ar1`` design.
    """
    design, drop = _design(series, design_kind)
    M, p = design.rows, design.p
    if max_breaks < 1:
        raise ValueError("max_breaks must be >= 1")
    h = min_segment(M, trim, p)
    if (max_breaks + 1) * h > M:
        raise ValueError(f"{max_breaks} breaks with minimum segment {h} do not fit in {M} rows")
    cost, back = _kernels.partition_dp(design.X, design.y, h, max_breaks, numba=numba)
    out = []
    for v in range(1, max_breaks + 1):
        cuts = []
        j = M
        for level in range(v, 0, -1):
            j = int(back[level, j])
            cuts.append(j)
        cuts.reverse()
        points = [c + drop for c in cuts]
        out.append(BreakEstimate(tuple(points), float(cost[v, M]), _segment_fits(design, cuts),
                                 _labels(series, points)))
    return out


def exhaustive_partition(design: Design, h: int, n_breaks: int) -> tuple[float, tuple[int, ...]]:
    """Brute-force optimal partition (reference for small samples)."""
    M = design.rows
    best = (math.inf, ())

    def ssr(a, b):
        X, y = design.X[a:b], design.y[a:b]
        beta = np.linalg.lstsq(X, y, rcond=None)[0]
        r = y - X @ beta
        return float(r @ r)

    for cuts in itertools.combinations(range(h, M - h + 1), n_breaks):
        bounds = (0, *cuts, M)
        if any(b - a < h for a, b in zip(bounds[:-1], bounds[1:])):
            continue
        total = sum(ssr(a, b) for a, b in zip(bounds[:-1], bounds[1:]))
        if total < best[0]:
            best = (total, cuts)
    return best


def sup_f(
    series: TimeSeries | np.ndarray,
    trim: float = 0.15,
    design_kind: str = "mean",
    critical_value: float | None = None,
    numba: bool | None = None,
) -> dict:
    """Sup-F statistic for one break of unknown date.

    ``F(k) = ((SSR0 - SSR1(k)) / p) / (SSR1(k) / (N - 2p))`` over the trimmed
    range; a perfect two-regime fit is capped at ``F_CAP``. ``p_flag`` is
    ``stat > critical_value`` when a critical value is given.
    """
    design, drop = _design(series, design_kind)
    M, p = design.rows, design.p
    h = min_segment(M, trim, p)
    if 2 * h > M:
        raise ValueError("trimming leaves no admissible break date")
    full = ols_fit(design)
    ssr0 = float(full.residuals @ full.residuals)
    head = _kernels.ssr_row(design.X, design.y, 0, h, numba=numba)
    tail_rev = _kernels.ssr_row(design.X[::-1], design.y[::-1], 0, h, numba=numba)
    ks = np.arange(h, M - h + 1)
    ssr1 = head[ks] + tail_rev[M - ks]
    tiny = 1e-14 * max(ssr0, float(design.y @ design.y), 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = ((ssr0 - ssr1) / p) / (ssr1 / (M - 2 * p))
    F = np.where(ssr1 <= tiny, F_CAP, np.minimum(F, F_CAP))
    i = int(np.argmax(F))
    k = int(ks[i]) + drop
    return {
        "stat": float(F[i]),
        "argmax_index": k,
        "argmax_label": _labels(series, [k])[0],
        "p_flag": None if critical_value is None else bool(F[i] > critical_value),
        "critical_value": critical_value,
        "trim": trim,
        "F": F,
    }


def retro_cusum_sq(series: TimeSeries | np.ndarray, design_kind: str = "ar1") -> tuple[DetectorPath, int]:
    """Full-sample centred CUSUM of squared residuals and its arg-max.

    Residuals and their mean square come from the full-sample fit; the
    partial sums are divided by ``sqrt(N)`` times the standard deviation of
    the squared residuals. An exact fit gives a flat zero path.
    """
    design, drop = _design(series, design_kind)
    fit = ols_fit(design)
    e2 = fit.residuals**2
    M = e2.size
    scale = float(np.max(np.abs(design.y))) or 1.0
    sd = float(e2.std(ddof=1))
    if float(e2.max()) <= (1e-10 * scale) ** 2 or sd == 0.0:
        vals = np.zeros(M)
    else:
        vals = np.cumsum(e2 - e2.mean()) / (math.sqrt(M) * sd)
    times = np.arange(1, M + 1) / M
    path = DetectorPath(times, vals, np.full(M, np.inf))
    return path, int(np.argmax(np.abs(vals))) + 1 + drop
