"""Stopping-time engine: detector stream against a boundary, first crossing wins."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .boundaries import Boundary, threshold
from .detectors import DetectorPath, DetectorSpec, DetectorState, clock, detector_values
from .linreg import Design, ar1_design, mean_design
from .timeseries import SampleSplit, TimeSeries

DESIGNS = ("ar1", "mean")


@dataclass(frozen=True)
class MonitorResult:
    """Outcome of one monitoring run.

    ``tau`` counts monitoring observations consumed up to and including the
    first crossing (``k*``), or is None when the boundary is never reached.
    """

    detected: bool
    tau: int | None
    tau_label: str | None
    path: DetectorPath
    config_echo: dict = field(default_factory=dict)

    def report(self) -> dict:
        return {"detected": self.detected, "tau": self.tau, "tau_label": self.tau_label, **self.config_echo}


def build_design(values: np.ndarray, kind: str) -> tuple[Design, int]:
    """Design over the given observations and how many leading observations it drops."""
    if kind == "ar1":
        return ar1_design(values), 1
    if kind == "mean":
        return mean_design(values), 0
    raise ValueError(f"design must be one of {DESIGNS}, got {kind!r}")


def first_crossing(statistic: np.ndarray, bound: np.ndarray) -> int | None:
    """1-based index of the first ``statistic >= bound`` (NaN never crosses)."""
    with np.errstate(invalid="ignore"):
        hit = np.flatnonzero(statistic >= bound)
    return int(hit[0]) + 1 if hit.size else None


def stopping_time(
    values: np.ndarray,
    n: int,
    spec: DetectorSpec,
    boundary: Boundary,
    design: str = "ar1",
    numba: bool | None = None,
) -> int | None:
    """Stopping index only, for the Monte Carlo loops (no path object)."""
    des, drop = build_design(values, design)
    n_rows = n - drop
    stat = np.abs(detector_values(des, n_rows, spec, numba=numba))
    bound = threshold(boundary, np.arange(1, stat.size + 1), n_rows)
    return first_crossing(stat, bound)


def run_monitor(
    series: TimeSeries,
    split: SampleSplit,
    det: DetectorSpec,
    boundary: Boundary,
    design: str = "ar1",
    complete_path: bool = False,
    numba: bool | None = None,
) -> MonitorResult:
    """Fit on observations ``[0, n)`` and monitor ``n .. N-1``.

    The path is evaluated in one vectorised pass, which yields exactly the
    values a step-by-step stream would. Unless ``complete_path`` is set it
    is cut at the first crossing, so nothing after ``tau`` is reported.
    """
    if len(series) < split.N:
        raise ValueError(f"series has {len(series)} observations, split needs N = {split.N}")
    values = series.values[: split.N]
    des, drop = build_design(values, design)
    n_rows = split.n - drop
    vals = detector_values(des, n_rows, det, numba=numba)
    steps = vals.size
    bound = threshold(boundary, np.arange(1, steps + 1), n_rows)
    tau = first_crossing(np.abs(vals), bound)
    path = DetectorPath(clock(n_rows, steps), vals, bound)
    if tau is not None and not complete_path:
        path = path.truncate(tau)
    label = series.label(split.n + tau - 1) if tau is not None else None
    echo = {
        "n": split.n,
        "N": split.N,
        "T": split.T,
        "design": design,
        "detector": det.kind.value,
        "detector_spec": det.as_dict(),
        "boundary": boundary.kind.value,
        "lambda": boundary.lam,
    }
    return MonitorResult(tau is not None, tau, label, path, echo)


def stream_monitor(
    series: TimeSeries,
    split: SampleSplit,
    det: DetectorSpec,
    boundary: Boundary,
    design: str = "ar1",
) -> Iterator[tuple[int, float | None, float, bool]]:
    """Online variant: yields ``(k, value, boundary, crossed)`` and stops after the first crossing.

    Observations past the crossing are never touched.
    """
    values = series.values
    drop = 1 if design == "ar1" else 0
    hist_design, _ = build_design(values[: split.n], design)
    state = DetectorState(hist_design, det)
    n_rows = split.n - drop
    for k in range(1, split.N - split.n + 1):
        i = split.n + k - 1
        x = np.array([1.0, values[i - 1]]) if design == "ar1" else np.array([1.0])
        v = state.step(x, float(values[i]))
        b = float(threshold(boundary, np.array([k]), n_rows)[0])
        crossed = v is not None and abs(v) >= b
        yield k, v, b, crossed
        if crossed:
            return


def decision_rule_ratio(path: DetectorPath, lambda_n: float) -> int | None:
    """First step where ``statistic / boundary >= lambda_n``.

    Steps with an infinite boundary (not yet active) never trigger.
    """
    if lambda_n == math.inf:
        return None
    b = path.boundary_values
    if np.any(b <= 0):
        raise ValueError("boundary values must be strictly positive")
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = path.statistic / b
    return first_crossing(ratio, np.full(ratio.shape, float(lambda_n)))
