"""Hot numeric kernels, each with a numba loop version and a numpy twin.

Public names (``ar1_filter``, ``recursive_betas`` ...) dispatch on
:func:`seqbreak._accel.use_numba`. The ``_nb`` functions are written as
explicit loops for numba; the ``_np`` functions are vectorised numpy and are
the fallback when numba is disabled. Both are kept numerically equivalent
(tests compare them to 1e-9).
"""
from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from ._accel import njit, use_numba

RESOLVE_EVERY = 64
EIG_FLOOR = 1e-12
SINGULAR_RCOND = 1e-12


# ----------------------------------------------------------------------------
# AR(1) recursion with an optional parameter switch
# ----------------------------------------------------------------------------

@njit
def _ar1_filter_nb(eps, mu0, rho0, mu1, rho1, switch, y0):
    out = np.empty(eps.shape[0])
    prev = y0
    for i in range(eps.shape[0]):
        if i < switch:
            prev = mu0 + rho0 * prev + eps[i]
        else:
            prev = mu1 + rho1 * prev + eps[i]
        out[i] = prev
    return out


def _ar1_filter_np(eps, mu0, rho0, mu1, rho1, switch, y0):
    switch = min(max(switch, 0), eps.shape[0])
    head = lfilter([1.0], [1.0, -rho0], mu0 + eps[:switch], zi=[rho0 * y0])[0]
    last = head[-1] if switch > 0 else y0
    tail = lfilter([1.0], [1.0, -rho1], mu1 + eps[switch:], zi=[rho1 * last])[0]
    return np.concatenate([head, tail])


def ar1_filter(eps, mu0, rho0, mu1=None, rho1=None, switch=None, y0=0.0, numba=None):
    """y[i] = mu + rho*y[i-1] + eps[i], switching to (mu1, rho1) from ``switch`` on."""
    eps = np.ascontiguousarray(eps, dtype=np.float64)
    mu1 = mu0 if mu1 is None else mu1
    rho1 = rho0 if rho1 is None else rho1
    switch = eps.shape[0] if switch is None else int(switch)
    fn = _ar1_filter_nb if use_numba(numba) else _ar1_filter_np
    return fn(eps, float(mu0), float(rho0), float(mu1), float(rho1), switch, float(y0))


# ----------------------------------------------------------------------------
# GARCH(1,1) conditional variance
# ----------------------------------------------------------------------------

@njit
def _garch_var_nb(eps, omega, alpha, beta, h1):
    h = np.empty(eps.shape[0])
    h[0] = h1
    for t in range(1, eps.shape[0]):
        h[t] = omega + alpha * eps[t - 1] * eps[t - 1] + beta * h[t - 1]
    return h


def _garch_var_np(eps, omega, alpha, beta, h1):
    if eps.shape[0] == 1:
        return np.array([h1])
    drive = omega + alpha * eps[:-1] ** 2
    rest = lfilter([1.0], [1.0, -beta], drive, zi=[beta * h1])[0]
    return np.concatenate([[h1], rest])


def garch_variance(eps, omega, alpha, beta, h1, numba=None):
    """Conditional variances h[t] = omega + alpha*eps[t-1]**2 + beta*h[t-1], h[0] = h1."""
    eps = np.ascontiguousarray(eps, dtype=np.float64)
    fn = _garch_var_nb if use_numba(numba) else _garch_var_np
    return fn(eps, float(omega), float(alpha), float(beta), float(h1))


@njit
def _garch_sim_nb(z, omega, alpha, beta, h1):
    n = z.shape[0]
    eps = np.empty(n)
    h = np.empty(n)
    h[0] = h1
    eps[0] = np.sqrt(h1) * z[0]
    for t in range(1, n):
        h[t] = omega + alpha * eps[t - 1] * eps[t - 1] + beta * h[t - 1]
        eps[t] = np.sqrt(h[t]) * z[t]
    return eps, h


def _garch_sim_np(z, omega, alpha, beta, h1):
    # the recursion feeds back through eps**2, so there is no vectorised form
    n = z.shape[0]
    eps = np.empty(n)
    h = np.empty(n)
    h[0] = h1
    eps[0] = np.sqrt(h1) * z[0]
    for t in range(1, n):
        h[t] = omega + alpha * eps[t - 1] ** 2 + beta * h[t - 1]
        eps[t] = np.sqrt(h[t]) * z[t]
    return eps, h


def garch_simulate(z, omega, alpha, beta, h1, numba=None):
    """GARCH(1,1) innovations driven by standardised shocks ``z``; returns (eps, h)."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    fn = _garch_sim_nb if use_numba(numba) else _garch_sim_np
    return fn(z, float(omega), float(alpha), float(beta), float(h1))


# ----------------------------------------------------------------------------
# Small linear algebra helpers (numba side)
# ----------------------------------------------------------------------------

@njit
def _sym_sqrt_nb(a):
    w, v = np.linalg.eigh(a)
    p = a.shape[0]
    out = np.zeros((p, p))
    for k in range(p):
        lam = w[k] if w[k] > EIG_FLOOR else EIG_FLOOR
        s = np.sqrt(lam)
        for i in range(p):
            for j in range(p):
                out[i, j] += s * v[i, k] * v[j, k]
    return out


@njit
def _gram_nb(X, y, lo, hi, A, b):
    p = X.shape[1]
    A[:, :] = 0.0
    b[:] = 0.0
    for t in range(lo, hi):
        for i in range(p):
            b[i] += X[t, i] * y[t]
            for j in range(p):
                A[i, j] += X[t, i] * X[t, j]


@njit
def _solve_small_nb(A, b, M, out):
    """Gaussian elimination with partial pivoting into ``out`` (``M`` is scratch)."""
    p = b.shape[0]
    for i in range(p):
        for j in range(p):
            M[i, j] = A[i, j]
        M[i, p] = b[i]
    for c in range(p):
        piv = c
        big = abs(M[c, c])
        for r in range(c + 1, p):
            if abs(M[r, c]) > big:
                big = abs(M[r, c])
                piv = r
        if piv != c:
            for j in range(p + 1):
                tmp = M[c, j]
                M[c, j] = M[piv, j]
                M[piv, j] = tmp
        for r in range(c + 1, p):
            f = M[r, c] / M[c, c]
            for j in range(c, p + 1):
                M[r, j] -= f * M[c, j]
    for i in range(p - 1, -1, -1):
        acc = M[i, p]
        for j in range(i + 1, p):
            acc -= M[i, j] * out[j]
        out[i] = acc / M[i, i]


@njit
def _matvec_nb(R, v, out):
    p = v.shape[0]
    for i in range(p):
        acc = 0.0
        for j in range(p):
            acc += R[i, j] * v[j]
        out[i] = acc


@njit
def _reduce_nb(vec, euclid):
    acc = 0.0
    if euclid:
        for i in range(vec.shape[0]):
            acc += vec[i] * vec[i]
        return np.sqrt(acc)
    for i in range(vec.shape[0]):
        a = abs(vec[i])
        if a > acc:
            acc = a
    return acc


def _sym_sqrt_np(a):
    w, v = np.linalg.eigh(a)
    w = np.maximum(w, EIG_FLOOR)
    return (v * np.sqrt(w)[..., None, :]) @ np.swapaxes(v, -1, -2)


def _reduce_np(vecs, euclid):
    if euclid:
        return np.sqrt((vecs ** 2).sum(axis=-1))
    return np.abs(vecs).max(axis=-1)


# ----------------------------------------------------------------------------
# Recursive (expanding-window) OLS coefficients
# ----------------------------------------------------------------------------

@njit
def _recursive_betas_nb(X, y, start):
    m, p = X.shape
    out = np.empty((m - start + 1, p))
    A = np.zeros((p, p))
    b = np.zeros(p)
    M = np.empty((p, p + 1))
    # forward accumulation only; no downdating, so no drift to refresh
    for t in range(m):
        for i in range(p):
            b[i] += X[t, i] * y[t]
            for j in range(p):
                A[i, j] += X[t, i] * X[t, j]
        if t + 1 >= start:
            _solve_small_nb(A, b, M, out[t + 1 - start])
    return out


def _recursive_betas_np(X, y, start):
    A = np.cumsum(X[:, :, None] * X[:, None, :], axis=0)[start - 1:]
    b = np.cumsum(X * y[:, None], axis=0)[start - 1:]
    return np.linalg.solve(A, b[..., None])[..., 0]


def recursive_betas(X, y, start, numba=None):
    """OLS coefficients on the first j rows for j = start, ..., len(y)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    fn = _recursive_betas_nb if use_numba(numba) else _recursive_betas_np
    return fn(X, y, int(start))


# ----------------------------------------------------------------------------
# Estimates-based detector paths (RE and ME)
# ----------------------------------------------------------------------------

@njit
def _re_path_nb(X, y, n_hist, beta_hist, omega_hist, sigma, rescale, euclid):
    m_tot, p = X.shape
    betas = _recursive_betas_nb(X, y, n_hist)
    k_tot = m_tot - n_hist
    out = np.empty(k_tot)
    root_hist = _sym_sqrt_nb(omega_hist)
    A = np.zeros((p, p))
    b = np.zeros(p)
    _gram_nb(X, y, 0, n_hist, A, b)
    scale0 = sigma * np.sqrt(n_hist)
    diff = np.empty(p)
    dev = np.empty(p)
    for k in range(1, k_tot + 1):
        m = n_hist + k
        for i in range(p):
            for j in range(p):
                A[i, j] += X[m - 1, i] * X[m - 1, j]
        if rescale:
            root = _sym_sqrt_nb(A / m)
        else:
            root = root_hist
        for i in range(p):
            diff[i] = betas[k, i] - beta_hist[i]
        _matvec_nb(root, diff, dev)
        out[k - 1] = (m / scale0) * _reduce_nb(dev, euclid)
    return out


def _re_path_np(X, y, n_hist, beta_hist, omega_hist, sigma, rescale, euclid):
    m_tot = X.shape[0]
    betas = _recursive_betas_np(X, y, n_hist)[1:]
    m = np.arange(n_hist + 1, m_tot + 1, dtype=np.float64)
    if rescale:
        A = np.cumsum(X[:, :, None] * X[:, None, :], axis=0)[n_hist:]
        root = _sym_sqrt_np(A / m[:, None, None])
    else:
        root = np.broadcast_to(_sym_sqrt_np(omega_hist), (m.shape[0],) + omega_hist.shape)
    dev = np.einsum("kij,kj->ki", root, betas - beta_hist)
    return m / (sigma * np.sqrt(n_hist)) * _reduce_np(dev, euclid)


def re_path(X, y, n_hist, beta_hist, omega_hist, sigma, rescale=False, euclid=False, numba=None):
    """Recursive-estimates statistic for m = n_hist+1, ..., len(y) rows."""
    args = (
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
        int(n_hist),
        np.ascontiguousarray(beta_hist, dtype=np.float64),
        np.ascontiguousarray(omega_hist, dtype=np.float64),
        float(sigma),
        bool(rescale),
        bool(euclid),
    )
    return (_re_path_nb if use_numba(numba) else _re_path_np)(*args)


@njit
def _me_path_nb(X, y, n_hist, width, beta_hist, omega_hist, sigma, rescale, euclid):
    m_tot, p = X.shape
    k_tot = m_tot - n_hist
    out = np.empty(k_tot)
    root_hist = _sym_sqrt_nb(omega_hist)
    scale = width / (sigma * np.sqrt(n_hist))
    A = np.zeros((p, p))
    b = np.zeros(p)
    diff = np.empty(p)
    dev = np.empty(p)
    beta_w = np.empty(p)
    M = np.empty((p, p + 1))
    lo = n_hist + 1 - width
    _gram_nb(X, y, lo, n_hist + 1, A, b)
    for k in range(1, k_tot + 1):
        hi = n_hist + k
        lo = hi - width
        if k > 1:
            if k % RESOLVE_EVERY == 0:
                _gram_nb(X, y, lo, hi, A, b)
            else:
                for i in range(p):
                    b[i] += X[hi - 1, i] * y[hi - 1] - X[lo - 1, i] * y[lo - 1]
                    for j in range(p):
                        A[i, j] += X[hi - 1, i] * X[hi - 1, j] - X[lo - 1, i] * X[lo - 1, j]
        _solve_small_nb(A, b, M, beta_w)
        if rescale:
            root = _sym_sqrt_nb(A / width)
        else:
            root = root_hist
        for i in range(p):
            diff[i] = beta_w[i] - beta_hist[i]
        _matvec_nb(root, diff, dev)
        out[k - 1] = scale * _reduce_nb(dev, euclid)
    return out


def _me_path_np(X, y, n_hist, width, beta_hist, omega_hist, sigma, rescale, euclid):
    m_tot, p = X.shape
    zero_a = np.zeros((1, p, p))
    zero_b = np.zeros((1, p))
    cA = np.concatenate([zero_a, np.cumsum(X[:, :, None] * X[:, None, :], axis=0)])
    cb = np.concatenate([zero_b, np.cumsum(X * y[:, None], axis=0)])
    hi = np.arange(n_hist + 1, m_tot + 1)
    A = cA[hi] - cA[hi - width]
    b = cb[hi] - cb[hi - width]
    beta_w = np.linalg.solve(A, b[..., None])[..., 0]
    if rescale:
        root = _sym_sqrt_np(A / width)
    else:
        root = np.broadcast_to(_sym_sqrt_np(omega_hist), A.shape)
    dev = np.einsum("kij,kj->ki", root, beta_w - beta_hist)
    return width / (sigma * np.sqrt(n_hist)) * _reduce_np(dev, euclid)


def me_path(X, y, n_hist, width, beta_hist, omega_hist, sigma, rescale=False, euclid=False, numba=None):
    """Moving-estimates statistic; the window is the last ``width`` rows ending at m."""
    args = (
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
        int(n_hist),
        int(width),
        np.ascontiguousarray(beta_hist, dtype=np.float64),
        np.ascontiguousarray(omega_hist, dtype=np.float64),
        float(sigma),
        bool(rescale),
        bool(euclid),
    )
    return (_me_path_nb if use_numba(numba) else _me_path_np)(*args)


# ----------------------------------------------------------------------------
# Limit-process suprema for critical-value simulation
# ----------------------------------------------------------------------------

@njit
def _bridge_sup_nb(dW, spu, lag, weight, offset, squared, ends):
    """dW: (reps, dim, steps). Z(t) = W(t) - t W(1); D(t) = Z(t) - Z(t - lag/spu)."""
    reps, dim, steps = dW.shape
    n_end = ends.shape[0]
    out = np.zeros((reps, n_end))
    W = np.empty(steps + 1)
    for r in range(reps):
        best = np.full(steps + 1, -np.inf)
        for d in range(dim):
            W[0] = 0.0
            for i in range(steps):
                W[i + 1] = W[i] + dW[r, d, i]
            w1 = W[spu]
            for i in range(1, steps + 1):
                if weight[i] == 0.0:
                    continue
                z = W[i] - (i / spu) * w1
                if lag > 0:
                    j = i - lag
                    z -= W[j] - (j / spu) * w1
                v = abs(z) * weight[i]
                if squared:
                    v = v * v
                v -= offset[i]
                if v > best[i]:
                    best[i] = v
        run = -np.inf
        e = 0
        for i in range(steps + 1):
            if best[i] > run:
                run = best[i]
            while e < n_end and ends[e] == i:
                out[r, e] = run
                e += 1
    return out


def _bridge_sup_np(dW, spu, lag, weight, offset, squared, ends):
    reps, dim, steps = dW.shape
    W = np.concatenate([np.zeros((reps, dim, 1)), np.cumsum(dW, axis=-1)], axis=-1)
    t = np.arange(steps + 1) / spu
    Z = W - t * W[..., spu:spu + 1]
    if lag > 0:
        D = np.zeros_like(Z)
        D[..., lag:] = Z[..., lag:] - Z[..., :-lag]
        Z = D
    v = np.abs(Z) * weight
    if squared:
        v = v * v
    v = v - offset
    v = np.where(weight == 0.0, -np.inf, v).max(axis=1)
    run = np.maximum.accumulate(v, axis=-1)
    return run[:, ends]


def bridge_sup(dW, spu, weight, offset=None, squared=False, lag=0, ends=None, numba=None):
    """Running suprema of a weighted Brownian-bridge functional.

    Parameters
    ----------
    dW : ndarray, shape (reps, dim, steps)
        Brownian increments with variance ``1/spu``.
    weight : ndarray, shape (steps + 1,)
        Multiplier applied to ``|Z|`` on the grid ``i/spu``; zero marks an
        inactive point.
    offset : ndarray, optional
        Subtracted after weighting (and squaring).
    ends : sequence of int
        Grid indices at which the running supremum is reported.

    Returns
    -------
    ndarray, shape (reps, len(ends))
    """
    dW = np.ascontiguousarray(dW, dtype=np.float64)
    steps = dW.shape[-1]
    weight = np.ascontiguousarray(weight, dtype=np.float64)
    offset = np.zeros(steps + 1) if offset is None else np.ascontiguousarray(offset, dtype=np.float64)
    ends = np.asarray([steps] if ends is None else ends, dtype=np.int64)
    fn = _bridge_sup_nb if use_numba(numba) else _bridge_sup_np
    return fn(dW, int(spu), int(lag), weight, offset, bool(squared), ends)


# ----------------------------------------------------------------------------
# Segment sums of squared residuals and the break-partition dynamic program
# ----------------------------------------------------------------------------

@njit
def _ssr_row_nb(X, y, i, h):
    """SSR of [i, j) for every j; entries with j - i < h are +inf."""
    m, p = X.shape
    row = np.full(m + 1, np.inf)
    if p == 1:
        # Welford update on y (the design is the intercept only)
        mean = 0.0
        m2 = 0.0
        for j in range(i, m):
            cnt = j - i + 1
            d = y[j] - mean
            mean += d / cnt
            m2 += d * (y[j] - mean)
            if cnt >= h:
                row[j + 1] = m2 if m2 > 0.0 else 0.0
        return row
    A = np.zeros((p, p))
    b = np.zeros(p)
    M = np.empty((p, p + 1))
    beta = np.empty(p)
    yy = 0.0
    for j in range(i, m):
        for a in range(p):
            b[a] += X[j, a] * y[j]
            for c in range(p):
                A[a, c] += X[j, a] * X[j, c]
        yy += y[j] * y[j]
        if j - i + 1 >= h:
            if p == 2:
                # closed-form eigenvalues of the symmetric 2x2 Gram matrix
                half = 0.5 * (A[0, 0] + A[1, 1])
                rad = np.sqrt(0.25 * (A[0, 0] - A[1, 1]) ** 2 + A[0, 1] * A[0, 1])
                lo_ev, hi_ev = half - rad, half + rad
            else:
                w = np.linalg.eigvalsh(A)
                lo_ev, hi_ev = w[0], w[-1]
            if lo_ev <= SINGULAR_RCOND * hi_ev:
                beta = np.linalg.pinv(A) @ b
            else:
                _solve_small_nb(A, b, M, beta)
            s = yy - b @ beta
            row[j + 1] = s if s > 0.0 else 0.0
    return row


def _ssr_row_np(X, y, i, h):
    m, p = X.shape
    row = np.full(m + 1, np.inf)
    if m - i < h:
        return row
    if p == 1:
        d = y[i:] - y[i]
        cnt = np.arange(1, m - i + 1, dtype=np.float64)
        s1 = np.cumsum(d)
        s2 = np.cumsum(d * d)
        ssr = np.maximum(s2 - s1 * s1 / cnt, 0.0)
        row[i + h:] = ssr[h - 1:]
        return row
    Xs = X[i:]
    A = np.cumsum(Xs[:, :, None] * Xs[:, None, :], axis=0)[h - 1:]
    b = np.cumsum(Xs * y[i:, None], axis=0)[h - 1:]
    yy = np.cumsum(y[i:] ** 2)[h - 1:]
    w = np.linalg.eigvalsh(A)
    bad = w[:, 0] <= SINGULAR_RCOND * w[:, -1]
    beta = np.empty_like(b)
    if (~bad).any():
        beta[~bad] = np.linalg.solve(A[~bad], b[~bad][..., None])[..., 0]
    if bad.any():
        beta[bad] = np.einsum("kij,kj->ki", np.linalg.pinv(A[bad]), b[bad])
    row[i + h:] = np.maximum(yy - np.einsum("kj,kj->k", b, beta), 0.0)
    return row


@njit
def _partition_dp_nb(X, y, h, max_breaks):
    m = X.shape[0]
    cost = np.full((max_breaks + 1, m + 1), np.inf)
    back = np.full((max_breaks + 1, m + 1), -1, dtype=np.int64)
    for i in range(0, m - h + 1):
        row = _ssr_row_nb(X, y, i, h)
        if i == 0:
            for j in range(m + 1):
                cost[0, j] = row[j]
            continue
        for v in range(1, max_breaks + 1):
            base = cost[v - 1, i]
            if base == np.inf:
                continue
            for j in range(i + h, m + 1):
                c = base + row[j]
                if c < cost[v, j]:
                    cost[v, j] = c
                    back[v, j] = i
    return cost, back


def _partition_dp_np(X, y, h, max_breaks):
    m = X.shape[0]
    cost = np.full((max_breaks + 1, m + 1), np.inf)
    back = np.full((max_breaks + 1, m + 1), -1, dtype=np.int64)
    for i in range(0, m - h + 1):
        row = _ssr_row_np(X, y, i, h)
        if i == 0:
            cost[0] = row
            continue
        base = cost[:-1, i]
        cand = base[:, None] + row[None, :]
        better = cand < cost[1:]
        cost[1:] = np.where(better, cand, cost[1:])
        back[1:] = np.where(better, i, back[1:])
    return cost, back


def ssr_row(X, y, i, h, numba=None):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    fn = _ssr_row_nb if use_numba(numba) else _ssr_row_np
    return fn(X, y, int(i), int(h))


def partition_dp(X, y, h, max_breaks, numba=None):
    """Optimal-partition DP over half-open segments of length >= h.

    Returns ``(cost, back)`` where ``cost[v, j]`` is the minimal total SSR of
    splitting rows ``[0, j)`` into ``v + 1`` segments and ``back[v, j]`` the
    start of the last segment (smallest start on ties).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    fn = _partition_dp_nb if use_numba(numba) else _partition_dp_np
    return fn(X, y, int(h), int(max_breaks))


# ----------------------------------------------------------------------------
# Single mean-shift least squares scan
# ----------------------------------------------------------------------------

@njit
def _two_segment_ssr_nb(y):
    n = y.shape[0]
    mu = y[0]
    tot1 = 0.0
    tot2 = 0.0
    for t in range(n):
        d = y[t] - mu
        tot1 += d
        tot2 += d * d
    out = np.empty(n - 1)
    s1 = 0.0
    s2 = 0.0
    for k in range(1, n):
        d = y[k - 1] - mu
        s1 += d
        s2 += d * d
        r1 = tot1 - s1
        r2 = tot2 - s2
        v = (s2 - s1 * s1 / k) + (r2 - r1 * r1 / (n - k))
        out[k - 1] = v if v > 0.0 else 0.0
    return out


def _two_segment_ssr_np(y):
    n = y.shape[0]
    d = y - y[0]
    s1 = np.cumsum(d)[:-1]
    s2 = np.cumsum(d * d)[:-1]
    k = np.arange(1, n, dtype=np.float64)
    r1 = d.sum() - s1
    r2 = (d * d).sum() - s2
    return np.maximum((s2 - s1 * s1 / k) + (r2 - r1 * r1 / (n - k)), 0.0)


def two_segment_ssr(y, numba=None):
    """S(k) for k = 1..n-1: SSR of a two-mean fit split after observation k."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    fn = _two_segment_ssr_nb if use_numba(numba) else _two_segment_ssr_np
    return fn(y)
