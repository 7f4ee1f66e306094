"""Critical values of the boundaries by simulating the detectors' limit process.

Under no break every normalised detector behaves like
``Z(t) = W(t) - t W(1)`` on the monitoring clock ``t in [1, T]`` (W a
standard Brownian motion, so ``Var Z(t) = t (t - 1)``); the moving-window
kinds behave like ``Z(t) - Z(t - h)``. For a boundary linear in ``lambda``
the crossing event is ``sup |Z(t)| / b(t; 1) >= lambda``, so the critical
value is a quantile of that supremum. b1 is handled through
``sup Z^2 / (t (t-1)) - log(t / (t-1))``, whose quantile is ``lambda**2``.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .boundaries import Boundary, BoundaryKind, evaluate

CHUNK = 128
PROCESS_KINDS = ("re", "cusum", "me", "mosum")


@dataclass(frozen=True)
class BridgeSimConfig:
    replications: int = 25000
    steps_per_unit: int = 1000
    horizon_T: float = 2.0
    alpha: float = 0.05
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.steps_per_unit < 10:
            raise ValueError("steps_per_unit must be >= 10")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.horizon_T < 1:
            raise ValueError("horizon_T must be >= 1")


def _increments(seeds: list[np.random.SeedSequence], dim: int, steps: int, spu: int) -> np.ndarray:
    out = np.empty((len(seeds), dim, steps))
    scale = 1.0 / math.sqrt(spu)
    for i, ss in enumerate(seeds):
        out[i] = np.random.default_rng(ss).standard_normal((dim, steps)) * scale
    return out


def simulate_sup(
    config: BridgeSimConfig,
    weight: np.ndarray,
    offset: np.ndarray | None = None,
    squared: bool = False,
    lag: int = 0,
    dim: int = 1,
    ends: list[int] | None = None,
    numba: bool | None = None,
) -> np.ndarray:
    """Per-replication running suprema, shape ``(replications, len(ends))``.

    Replication ``r`` draws from the ``r``-th child of
    ``SeedSequence(config.seed)``, so the output does not depend on
    ``config.threads``.
    """
    spu = config.steps_per_unit
    steps = int(round(config.horizon_T * spu))
    ends = [steps] if ends is None else list(ends)
    children = np.random.SeedSequence(config.seed).spawn(config.replications)
    chunks = [children[i:i + CHUNK] for i in range(0, len(children), CHUNK)]

    def work(chunk):
        dW = _increments(chunk, dim, steps, spu)
        return _kernels.bridge_sup(dW, spu, weight, offset, squared, lag, ends, numba=numba)

    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    return np.concatenate(parts, axis=0)


def _grid(config: BridgeSimConfig) -> np.ndarray:
    steps = int(round(config.horizon_T * config.steps_per_unit))
    return np.arange(steps + 1) / config.steps_per_unit


def _process_setup(process_kind: str, h: float, spu: int) -> tuple[int, float]:
    """Window lag in grid steps and the first active time."""
    kind = process_kind.lower().replace("ols-", "")
    if kind not in PROCESS_KINDS:
        raise ValueError(f"process_kind must be one of {PROCESS_KINDS}, got {process_kind!r}")
    if kind in ("me", "mosum"):
        lag = int(round(h * spu))
        return lag, (1.0 + h if kind == "mosum" else 1.0)
    return 0, 1.0


def _weights(boundary: Boundary, t: np.ndarray, start: float):
    """Weight, offset and squared flag so that ``weight*|Z| (squared) - offset`` is the ratio statistic."""
    active = (t >= start - 1e-12) & boundary.in_domain(t) & (t > 1.0 - 1e-12)
    weight = np.zeros(t.shape)
    if boundary.kind is BoundaryKind.B1:
        ok = active & (t > 1.0)
        weight[ok] = 1.0 / np.sqrt(t[ok] * (t[ok] - 1.0))
        offset = np.zeros(t.shape)
        offset[ok] = np.log(t[ok] / (t[ok] - 1.0))
        return weight, offset, True
    if boundary.kind is BoundaryKind.B6:
        shape = t ** (1.0 - boundary.gamma)
    else:
        shape = np.zeros(t.shape)
        shape[active] = evaluate(boundary.with_lambda(1.0), t[active])
    ok = active & (shape > 0)
    weight[ok] = 1.0 / shape[ok]
    return weight, None, False


def _ratio_sups(config, boundary, process_kind, h, dim, ends=None, numba=None):
    t = _grid(config)
    lag, start = _process_setup(process_kind, h, config.steps_per_unit)
    weight, offset, squared = _weights(boundary, t, start)
    return simulate_sup(config, weight, offset, squared, lag, dim, ends, numba=numba)


def order_statistic(sample: np.ndarray, alpha: float) -> float:
    """The ``ceil((1 - alpha) R)``-th smallest value (no interpolation)."""
    r = sample.shape[0]
    idx = min(max(math.ceil((1.0 - alpha) * r), 1), r) - 1
    return float(np.partition(sample, idx)[idx])


def simulate_lambda(
    config: BridgeSimConfig,
    boundary_kind: "str | BoundaryKind",
    process_kind: str = "re",
    dim: int = 1,
    gamma: float = 0.25,
    phi_inv: float = 1.618,
    h: float = 0.5,
    b1_squared: bool = True,
    numba: bool | None = None,
) -> float:
    """Critical scale giving crossing probability ``config.alpha`` on ``[1, T]``.

    ``dim`` independent components are reduced with the maximum norm (the
    RE/ME statistic with ``dim`` regressors). For b1 the return value is
    ``lambda**2`` when ``b1_squared`` is set, matching how b1's scale is
    configured in :class:`~seqbreak.boundaries.Boundary`.
    """
    kind = BoundaryKind.parse(boundary_kind)
    bnd = Boundary(kind, 1.0, gamma=gamma, phi_inv=phi_inv, n=1, b1_squared=b1_squared)
    sups = _ratio_sups(config, bnd, process_kind, h, dim, numba=numba)[:, 0]
    q = order_statistic(sups, config.alpha)
    if kind is BoundaryKind.B1:
        return q if b1_squared else math.sqrt(max(q, 0.0))
    return q


def lambda_table(
    config: BridgeSimConfig,
    boundary_kind: "str | BoundaryKind",
    horizons: list[float],
    alphas: list[float],
    process_kind: str = "re",
    dim: int = 1,
    numba: bool | None = None,
    **shape,
) -> np.ndarray:
    """Critical values for several horizons from one set of paths, shape ``(len(alphas), len(horizons))``.

    The paths run to ``max(horizons)`` and the running supremum is read off
    at each horizon.
    """
    kind = BoundaryKind.parse(boundary_kind)
    cfg = replace(config, horizon_T=max(horizons))
    bnd = Boundary(kind, 1.0, n=1, **shape)
    ends = [int(round(T * cfg.steps_per_unit)) for T in horizons]
    sups = _ratio_sups(cfg, bnd, process_kind, shape.get("h", 0.5), dim, ends, numba)
    return np.array([[order_statistic(sups[:, j], a) for j in range(len(horizons))] for a in alphas])


@dataclass(frozen=True)
class CrossingEstimate:
    probability: float
    se: float
    replications: int


def crossing_probability(
    config: BridgeSimConfig,
    boundary: Boundary,
    process_kind: str = "re",
    dim: int = 1,
    h: float = 0.5,
    numba: bool | None = None,
) -> CrossingEstimate:
    """Monte Carlo ``P(sup |Z| / b >= 1)`` with its binomial standard error."""
    sups = _ratio_sups(config, boundary.with_lambda(1.0) if boundary.kind is not BoundaryKind.B1 else boundary,
                       process_kind, h, dim, numba=numba)[:, 0]
    if boundary.kind is BoundaryKind.B1:
        lam2 = boundary.lam if boundary.b1_squared else boundary.lam**2
        hits = sups >= lam2
    else:
        hits = sups >= boundary.lam
    p = float(hits.mean())
    r = sups.size
    return CrossingEstimate(p, math.sqrt(max(p * (1 - p), 1e-300) / r), r)


def write_critical_table(path: str | Path, table: np.ndarray, alphas: list[float], horizons: list[float]) -> None:
    """CSV with one row per significance level and one column per horizon."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha"] + [f"T={T:g}" for T in horizons])
        for a, row in zip(alphas, table):
            w.writerow([f"{a:g}"] + [f"{v:.3f}" for v in row])


# ----------------------------------------------------------------------------
# Brownian-motion check of the closed-form crossing laws
# ----------------------------------------------------------------------------

def bm_crossing_mc(form: str, lam: float, reps: int = 20000, steps: int = 4000, seed: int = 0) -> CrossingEstimate:
    """Simulated crossing probability for the two closed-form boundaries.

    Both events are rewritten on the unit interval: ``sqrt_t1_log`` through
    the bridge representation ``V(s) = (1+s) B0(s/(1+s))`` and
    ``sqrt_t_log`` through time inversion ``U(u) = u W(1/u)``. Between grid
    points the exact crossing probability of a pinned Brownian segment under
    a linearly interpolated boundary is added, which removes most of the
    discretisation bias.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    dt = 1.0 / steps
    r = np.arange(1, steps) * dt
    lam2 = lam * lam
    if form == "sqrt_t1_log":
        # |B0(r)| >= sqrt((1 - r)(lam^2 - ln(1 - r))), r in (0, 1)
        grid = np.concatenate([[0.0], r])
        c = np.sqrt((1.0 - grid) * (lam2 - np.log1p(-grid)))
        bridge = True
    elif form == "sqrt_t_log":
        # |U(u)| >= sqrt(u (lam^2 - ln u)), u in (0, 1]
        grid = np.concatenate([r, [1.0]])
        c = np.sqrt(grid * (lam2 - np.log(grid)))
        bridge = False
    else:
        raise ValueError(f"unknown closed form {form!r}")

    hits = 0
    batch = 500
    done = 0
    while done < reps:
        m = min(batch, reps - done)
        dW = rng.standard_normal((m, steps)) * math.sqrt(dt)
        W = np.concatenate([np.zeros((m, 1)), np.cumsum(dW, axis=1)], axis=1)
        tfull = np.arange(steps + 1) * dt
        if bridge:
            path = (W - tfull * W[:, -1:])[:, :-1]
        else:
            # start the inverted path at the first grid point (u = dt), dropping u < dt
            path = W[:, 1:]
        cross = np.any(np.abs(path) >= c, axis=1)
        a = c[:-1] - path[:, :-1]
        b = c[1:] - path[:, 1:]
        a2 = c[:-1] + path[:, :-1]
        b2 = c[1:] + path[:, 1:]
        with np.errstate(over="ignore"):
            p_up = np.exp(-2.0 * np.clip(a, 0, None) * np.clip(b, 0, None) / dt)
            p_dn = np.exp(-2.0 * np.clip(a2, 0, None) * np.clip(b2, 0, None) / dt)
        survive = np.prod(np.clip(1.0 - p_up - p_dn, 0.0, 1.0), axis=1)
        u = rng.random(m)
        cross |= u > survive
        hits += int(cross.sum())
        done += m
    p = hits / reps
    return CrossingEstimate(p, math.sqrt(max(p * (1 - p), 1e-300) / reps), reps)
