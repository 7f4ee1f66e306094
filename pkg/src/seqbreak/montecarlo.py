"""Monte Carlo engine: AR(1) data generation, empirical size and power, run lengths."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.stats import gaussian_kde

from . import _kernels
from .boundaries import Boundary
from .detectors import DetectorSpec
from .garch import GarchParams
from .linreg import EstimationError
from .monitor import stopping_time
from .timeseries import TimeSeries

BURN_IN = 200
MAX_FAILURE_SHARE = 0.01
CHUNK = 64
BREAK_KINDS = ("none", "mu_shift", "rho_shift")


class McFailure(RuntimeError):
    """Too many replications hit an estimation failure."""


@dataclass(frozen=True)
class DgpSpec:
    """AR(1) data-generating process with an optional single parameter break.

    The break index is ``kappa = ceil(break_loc * (N - n))`` monitoring steps
    after the historical sample; the post-break value applies from
    observation ``n + kappa + 1`` (1-based) onward.
    """

    mu: float = 1.0
    rho: float = 0.3
    break_kind: str = "none"
    break_to: float | None = None
    break_loc: float = 0.5
    garch: GarchParams | None = None

    def __post_init__(self):
        if self.break_kind not in BREAK_KINDS:
            raise ValueError(f"break_kind must be one of {BREAK_KINDS}")
        if not abs(self.rho) < 1:
            raise ValueError("|rho| must be below 1")
        if not 0 < self.break_loc < 1:
            raise ValueError("break_loc must lie in (0, 1)")
        if self.break_kind != "none":
            if self.break_to is None:
                raise ValueError("break_to is required for a break")
            if self.break_kind == "rho_shift" and not abs(self.break_to) < 1:
                raise ValueError("post-break |rho| must be below 1")

    def kappa(self, n: int, N: int) -> int:
        return math.ceil(round(self.break_loc * (N - n), 9))

    @property
    def post(self) -> tuple[float, float]:
        if self.break_kind == "mu_shift":
            return float(self.break_to), self.rho
        if self.break_kind == "rho_shift":
            return self.mu, float(self.break_to)
        return self.mu, self.rho

    def as_dict(self) -> dict:
        out = {"mu": self.mu, "rho": self.rho, "break_kind": self.break_kind,
               "break_to": self.break_to, "break_loc": self.break_loc}
        if self.garch is not None:
            out["garch"] = self.garch.as_dict()
        return out


def horizon(n: int, T: float) -> int:
    return math.ceil(round(n * T, 9))


def simulate_values(spec: DgpSpec, n: int, T: float, seed) -> np.ndarray:
    """Raw array behind :func:`simulate_path` (``seed`` may be a SeedSequence)."""
    N = horizon(n, T)
    rng = np.random.default_rng(seed)
    total = BURN_IN + N
    z = rng.standard_normal(total)
    if spec.garch is not None:
        g = spec.garch
        h1 = g.omega / (1.0 - g.alpha - g.beta)
        eps, _ = _kernels.garch_simulate(z, g.omega, g.alpha, g.beta, h1)
    else:
        eps = z
    mu1, rho1 = spec.post
    switch = total if spec.break_kind == "none" else BURN_IN + n + spec.kappa(n, N)
    y0 = spec.mu / (1.0 - spec.rho)
    y = _kernels.ar1_filter(eps, spec.mu, spec.rho, mu1, rho1, switch, y0)
    return y[BURN_IN:]


def simulate_path(spec: DgpSpec, n: int, T: float, seed) -> TimeSeries:
    """Length-``ceil(n T)`` series after discarding ``BURN_IN`` draws."""
    return TimeSeries(simulate_values(spec, n, T, seed))


@dataclass
class McReport:
    rejection_rate: float
    detections: int
    replications: int
    failures: int
    arl_mean: float | None
    arl_sd: float | None
    delays: np.ndarray
    kappa: int
    config_echo: dict = field(default_factory=dict)

    @property
    def se(self) -> float:
        p = self.rejection_rate
        m = max(self.replications - self.failures, 1)
        return math.sqrt(p * (1 - p) / m)

    def summary(self) -> dict:
        return {
            "rejection_rate": self.rejection_rate,
            "se": self.se,
            "detections": self.detections,
            "replications": self.replications,
            "failures": self.failures,
            "arl_mean": self.arl_mean,
            "arl_sd": self.arl_sd,
            "kappa": self.kappa,
            **self.config_echo,
        }


def _taus(
    spec: DgpSpec,
    det: DetectorSpec,
    boundary: Boundary,
    n: int,
    T: float,
    B: int,
    seed: int,
    threads: int,
    design: str,
    numba: bool | None,
) -> list[int | None | str]:
    """Stopping index per replication (``"fail"`` on an estimation error), in replication order."""
    children = np.random.SeedSequence(seed).spawn(B)

    def one(ss):
        y = simulate_values(spec, n, T, ss)
        try:
            return stopping_time(y, n, det, boundary, design, numba=numba)
        except EstimationError:
            return "fail"

    def work(chunk):
        return [one(ss) for ss in chunk]

    chunks = [children[i:i + CHUNK] for i in range(0, B, CHUNK)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    return [t for part in parts for t in part]


def run_replications(
    spec: DgpSpec,
    det: DetectorSpec,
    boundary: Boundary,
    n: int,
    T: float = 2.0,
    B: int = 2500,
    seed: int = 0,
    threads: int = 1,
    design: str = "ar1",
    numba: bool | None = None,
) -> McReport:
    """Run ``B`` monitoring replications and aggregate.

    Replication ``b`` draws from the ``b``-th child of ``SeedSequence(seed)``
    and results are gathered in replication order, so the report does not
    depend on ``threads``. Estimation failures are dropped from the
    denominator when they stay under 1% of ``B``; above that the run fails.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    taus = _taus(spec, det, boundary, n, T, B, seed, threads, design, numba)
    fails = sum(1 for t in taus if t == "fail")
    if fails > MAX_FAILURE_SHARE * B:
        raise McFailure(f"{fails} of {B} replications failed to estimate")
    hits = np.array([t for t in taus if t not in (None, "fail")], dtype=np.int64)
    kappa = spec.kappa(n, horizon(n, T))
    delays = np.sort(hits - kappa)
    valid = B - fails
    mean = float(delays.mean()) if delays.size else None
    sd = float(delays.std(ddof=1)) if delays.size > 1 else (0.0 if delays.size == 1 else None)
    echo = {
        "dgp": spec.as_dict(),
        "detector": det.as_dict(),
        "boundary": {"kind": boundary.kind.value, "lambda": boundary.lam},
        "n": n,
        "T": T,
        "B": B,
        "seed": seed,
        "design": design,
    }
    return McReport(hits.size / valid if valid else 0.0, int(hits.size), B, fails, mean, sd, delays, kappa, echo)


def empirical_size(spec: DgpSpec, det: DetectorSpec, boundary: Boundary, n: int, T: float = 2.0,
                   B: int = 2500, **kw) -> McReport:
    """Rejection rate with stable parameters."""
    if spec.break_kind != "none":
        raise ValueError("empirical_size needs a no-break DGP")
    return run_replications(spec, det, boundary, n, T, B, **kw)


def empirical_power(spec: DgpSpec, det: DetectorSpec, boundary: Boundary, n: int, T: float = 2.0,
                    B: int = 2500, **kw) -> McReport:
    """Rejection rate with a break; a crossing anywhere in the monitoring period counts."""
    if spec.break_kind == "none":
        raise ValueError("empirical_power needs a break DGP")
    return run_replications(spec, det, boundary, n, T, B, **kw)


def arl_distribution(spec: DgpSpec, det: DetectorSpec, boundary: Boundary, n: int, T: float = 2.0,
                     B: int = 2500, **kw) -> McReport:
    """Delays ``tau - kappa`` over detecting replications (notional ``kappa`` under no break)."""
    return run_replications(spec, det, boundary, n, T, B, **kw)


def delay_density(delays: np.ndarray, points: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian kernel density with Silverman's bandwidth on an even grid."""
    d = np.asarray(delays, dtype=np.float64)
    if d.size < 2 or np.ptp(d) == 0:
        raise ValueError("need at least two distinct delays for a density")
    kde = gaussian_kde(d, bw_method="silverman")
    bw = float(np.sqrt(kde.covariance[0, 0]))
    grid = np.linspace(d.min() - 3 * bw, d.max() + 3 * bw, points)
    return grid, kde(grid)


def write_density(path: str | Path, delays: np.ndarray, points: int = 256) -> None:
    grid, dens = delay_density(delays, points)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delay", "density"])
        for g, v in zip(grid, dens):
            w.writerow([f"{g:.6g}", f"{v:.6g}"])


def power_curve(
    spec: DgpSpec,
    det: DetectorSpec,
    boundary_for_n: Boundary | Callable[[int], Boundary],
    n_grid: Sequence[int],
    T: float = 2.0,
    B: int = 2500,
    **kw,
) -> list[tuple[int, McReport]]:
    """Rejection rate per historical size. ``boundary_for_n`` may depend on n (b6)."""
    if not n_grid:
        raise ValueError("n_grid must not be empty")
    out = []
    for n in n_grid:
        bnd = boundary_for_n if isinstance(boundary_for_n, Boundary) else boundary_for_n(n)
        out.append((int(n), run_replications(spec, det, bnd, int(n), T, B, **kw)))
    return out


def write_reports(path: str | Path, rows: list[tuple[str, McReport]]) -> None:
    """CSV with one line per cell: rate, mean delay and its s.d."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "n", "rate", "se", "arl_mean", "arl_sd", "detections", "replications", "failures"])
        for name, r in rows:
            fmt = lambda v: "" if v is None else f"{v:.4f}"  # noqa: E731
            w.writerow([name, r.config_echo.get("n"), f"{r.rejection_rate:.4f}", f"{r.se:.4f}",
                        fmt(r.arl_mean), fmt(r.arl_sd), r.detections, r.replications, r.failures])
