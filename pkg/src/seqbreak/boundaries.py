"""Boundary functions b1..b9, admissibility scans and the two closed-form crossing laws.

All kinds except b6 are written on the scaled monitoring clock
``t = 1 + k/n``. b6 is written on elapsed raw time ``k`` and carries the
``sqrt(n)`` factor; :func:`threshold` converts every kind to the scale of
the ``1/sqrt(n)``-normalised detectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats
from scipy.integrate import trapezoid

PHI_INV = 1.618


class DomainError(ValueError):
    """Boundary evaluated outside its domain."""


class BoundaryKind(str, Enum):
    B1 = "b1"
    B2 = "b2"
    B3 = "b3"
    B4 = "b4"
    B5 = "b5"
    B6 = "b6"
    B7 = "b7"
    B8 = "b8"
    B9 = "b9"

    @classmethod
    def parse(cls, name: "str | BoundaryKind") -> "BoundaryKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"unknown boundary {name!r}; expected b1..b9") from None


# critical scales at the 5% level; b1's value is the squared scale (see Boundary)
DEFAULT_LAMBDA = {
    BoundaryKind.B1: 7.78,
    BoundaryKind.B2: 3.15,
    BoundaryKind.B3: 1.58,
    BoundaryKind.B4: 2.49,
    BoundaryKind.B5: 6.043,
    BoundaryKind.B6: 2.386,
}


@dataclass(frozen=True)
class Boundary:
    """A boundary function with its critical scale.

    Attributes
    ----------
    kind : BoundaryKind
    lam : float
        Critical scale. For b1 the number is read as ``lambda**2`` when
        ``b1_squared`` is True (the default), so ``lam=7.78`` means
        ``lambda = sqrt(7.78)``; set ``b1_squared=False`` to plug it in as
        ``lambda`` directly.
    gamma : float
        b6 shape in (0, 0.5].
    phi_inv : float
        Exponent and shift of b8/b9.
    n : int, optional
        Historical size, required by b6.
    """

    kind: BoundaryKind
    lam: float
    gamma: float = 0.25
    phi_inv: float = PHI_INV
    n: int | None = None
    b1_squared: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", BoundaryKind.parse(self.kind))
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive and finite, got {self.lam}")
        if self.kind is BoundaryKind.B6:
            if not 0 < self.gamma <= 0.5:
                raise ValueError(f"b6 needs gamma in (0, 0.5], got {self.gamma}")
            if self.n is None or self.n < 1:
                raise ValueError("b6 needs the historical size n >= 1")
        if self.kind in (BoundaryKind.B8, BoundaryKind.B9) and not self.phi_inv > 0:
            raise ValueError("phi_inv must be positive")

    @classmethod
    def default(cls, kind: "str | BoundaryKind", n: int | None = None, **kw) -> "Boundary":
        kind = BoundaryKind.parse(kind)
        if kind not in DEFAULT_LAMBDA:
            raise ValueError(f"no default critical value for {kind.value}; pass lam explicitly")
        return cls(kind, DEFAULT_LAMBDA[kind], n=n, **kw)

    def with_lambda(self, lam: float) -> "Boundary":
        return Boundary(self.kind, lam, self.gamma, self.phi_inv, self.n, self.b1_squared)

    @property
    def domain_start(self) -> tuple[float, bool]:
        """Left end of the domain and whether it is included."""
        k = self.kind
        if k in (BoundaryKind.B1, BoundaryKind.B2):
            return 1.0, True
        if k is BoundaryKind.B7:
            return 0.5, True
        if k in (BoundaryKind.B8, BoundaryKind.B9):
            return self.phi_inv, False
        if k is BoundaryKind.B6:
            return 0.0, True
        if k is BoundaryKind.B5:
            # largest root of t^2 - t + 0.1
            return 0.5 + math.sqrt(0.15), False
        return 0.0, False

    def in_domain(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        lo, closed = self.domain_start
        return (t >= lo) if closed else (t > lo)

    def __call__(self, t):
        return evaluate(self, t)


def evaluate(boundary: Boundary, t):
    """b(t) for scalar or array ``t``; raises :class:`DomainError` outside the domain.

    For b6, ``t`` is elapsed raw monitoring time ``k``.
    """
    arr = np.asarray(t, dtype=np.float64)
    if not np.all(boundary.in_domain(arr)):
        lo, closed = boundary.domain_start
        bad = float(arr[~boundary.in_domain(arr)].ravel()[0])
        sign = ">=" if closed else ">"
        raise DomainError(f"{boundary.kind.value} needs t {sign} {lo:g}, got {bad:g}")
    lam = boundary.lam
    k = boundary.kind
    with np.errstate(divide="ignore", invalid="ignore"):
        if k is BoundaryKind.B1:
            lam2 = lam if boundary.b1_squared else lam * lam
            tt = arr * (arr - 1.0)
            out = np.where(tt > 0, np.sqrt(tt * (lam2 + np.log(arr / np.where(tt > 0, arr - 1.0, 1.0)))), 0.0)
        elif k is BoundaryKind.B2:
            out = lam * np.sqrt(arr * (arr - 1.0))
        elif k is BoundaryKind.B3:
            out = lam * arr
        elif k is BoundaryKind.B4:
            out = lam * arr**2
        elif k is BoundaryKind.B5:
            out = lam * (arr**2 - arr + 0.1)
        elif k is BoundaryKind.B6:
            n = float(boundary.n)
            out = lam * math.sqrt(n) * (1.0 + arr / n) * (n / (arr + n)) ** boundary.gamma
        elif k is BoundaryKind.B7:
            out = lam * (arr * (arr - 0.5)) ** 0.25
        elif k is BoundaryKind.B8:
            f = boundary.phi_inv
            out = lam * (arr * (arr - f)) ** f
        else:
            f = boundary.phi_inv
            out = lam * (arr / (arr - f)) ** f
    return float(out) if np.ndim(out) == 0 else out


def threshold(boundary: Boundary, k, n: int) -> np.ndarray:
    """Boundary at monitoring step(s) ``k`` on the scale of the normalised detectors.

    The scaled clock ``t = 1 + k/n`` is used for every kind but b6, which is
    evaluated at raw ``k`` and divided by ``sqrt(n)``. Steps outside the
    domain (b8/b9 before ``phi_inv``) get ``+inf``: the boundary is not yet
    active there.
    """
    k = np.asarray(k, dtype=np.float64)
    if boundary.kind is BoundaryKind.B6:
        b = boundary if boundary.n == n else Boundary(
            boundary.kind, boundary.lam, boundary.gamma, boundary.phi_inv, n, boundary.b1_squared)
        return np.asarray(evaluate(b, k), dtype=np.float64) / math.sqrt(n)
    t = 1.0 + k / n
    ok = boundary.in_domain(t)
    out = np.full(t.shape, np.inf)
    if np.any(ok):
        out[ok] = evaluate(boundary, t[ok])
    return out


def unit_shape(kind: "str | BoundaryKind", t: np.ndarray, **kw) -> np.ndarray:
    """``b(t)`` at ``lambda = 1`` for the kinds that are linear in lambda."""
    kind = BoundaryKind.parse(kind)
    if kind is BoundaryKind.B1:
        raise ValueError("b1 is not linear in lambda")
    return np.asarray(evaluate(Boundary(kind, 1.0, **kw), t), dtype=np.float64)


# ----------------------------------------------------------------------------
# Admissibility scan
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    passed: bool
    first_violation: float | None = None
    value: float | None = None
    note: str = ""


def _integrand(boundary: Boundary, t: np.ndarray) -> np.ndarray:
    b = np.asarray(evaluate(boundary, t), dtype=np.float64)
    return t ** -1.5 * b * np.exp(-(b * b) / (2.0 * t))


def _monotone(values: np.ndarray, grid: np.ndarray, increasing: bool, rtol: float = 1e-12) -> Verdict:
    if values.size < 2:
        return Verdict(True, note="grid too short to test; vacuous")
    d = np.diff(values)
    slack = rtol * np.maximum(np.abs(values[1:]), 1.0)
    bad = np.flatnonzero(d < -slack) if increasing else np.flatnonzero(d > slack)
    if bad.size:
        return Verdict(False, float(grid[bad[0] + 1]))
    return Verdict(True)


def robbins_check(boundary: Boundary, grid, t0: float) -> dict[str, Verdict]:
    """Scan the four admissibility conditions on a finite grid.

    ``cond_i``: ``t**-0.5 * b(t)`` non-decreasing on the grid points ``>= t0``.
    ``cond_ii``: the same ratio non-increasing on the points ``<= t0``.
    ``cond_iii`` / ``cond_iv``: trapezoid integral of
    ``t**-1.5 * b * exp(-b**2 / (2t))`` over the upper / lower grid is finite;
    the upper one also needs ``t * integrand`` to be decaying over the last
    quarter of the grid, which rules out the ``1/t`` tails that diverge.
    Grid points outside the boundary's domain are dropped first.
    """
    g = np.sort(np.asarray(grid, dtype=np.float64))
    g = g[boundary.in_domain(g) & (g > 0)]
    if g.size == 0:
        raise DomainError("no grid point lies in the boundary's domain")
    upper = g[g >= t0]
    lower = g[g <= t0]
    out: dict[str, Verdict] = {}

    ratio_u = np.asarray(evaluate(boundary, upper), dtype=np.float64) / np.sqrt(upper) if upper.size else upper
    ratio_l = np.asarray(evaluate(boundary, lower), dtype=np.float64) / np.sqrt(lower) if lower.size else lower
    out["cond_i"] = _monotone(ratio_u, upper, increasing=True)
    out["cond_ii"] = _monotone(ratio_l, lower, increasing=False)

    if upper.size >= 2:
        f = _integrand(boundary, upper)
        val = float(trapezoid(f, upper))
        tail = upper.size - max(upper.size // 4, 2)
        tf = (upper * f)[tail:]
        bad_pts = np.flatnonzero(~np.isfinite(f))
        if bad_pts.size:
            out["cond_iii"] = Verdict(False, float(upper[bad_pts[0]]), val, "non-finite integrand")
        elif not (tf[-1] < tf[0] or tf[0] == 0.0):
            out["cond_iii"] = Verdict(False, float(upper[tail]), val, "integrand tail not decaying faster than 1/t")
        else:
            out["cond_iii"] = Verdict(bool(np.isfinite(val)), None, val)
    else:
        out["cond_iii"] = Verdict(True, note="upper grid too short; vacuous")

    if lower.size >= 2:
        f = _integrand(boundary, lower)
        val = float(trapezoid(f, lower))
        bad_pts = np.flatnonzero(~np.isfinite(f))
        if bad_pts.size:
            out["cond_iv"] = Verdict(False, float(lower[bad_pts[0]]), val, "non-finite integrand")
        else:
            out["cond_iv"] = Verdict(bool(np.isfinite(val)), None, val)
    else:
        out["cond_iv"] = Verdict(True, value=0.0, note="lower grid too short; vacuous")
    return out


# ----------------------------------------------------------------------------
# Closed forms
# ----------------------------------------------------------------------------

def closed_form_crossing(form: str, lam: float) -> float:
    """Crossing probability of standard Brownian motion for two classical boundaries.

    ``"sqrt_t_log"``: ``|W(t)| >= sqrt(t (lam^2 + ln t))`` for some ``t >= 1``,
    probability ``2 (1 - Phi(lam) + lam phi(lam))``.

    ``"sqrt_t1_log"``: ``|W(t)| >= sqrt((t+1)(lam^2 + ln(t+1)))`` for some
    ``t >= 0``, probability ``exp(-lam^2 / 2)``.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if form == "sqrt_t_log":
        return float(2.0 * (stats.norm.sf(lam) + lam * stats.norm.pdf(lam)))
    if form == "sqrt_t1_log":
        return float(math.exp(-0.5 * lam * lam))
    raise ValueError(f"unknown closed form {form!r}")
