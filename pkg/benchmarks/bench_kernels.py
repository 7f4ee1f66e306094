"""Timing of the hot kernels under both backends.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel is first called
once per backend (numba compiles or loads its cache), then timed over a few
repeats; the best wall time is reported together with the speed-up.
Setting SEQBREAK_DISABLE_NUMBA=1 limits the run to the numpy column.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from seqbreak import _kernels
from seqbreak._accel import NUMBA_ENABLED


def _cases(rng: np.random.Generator) -> dict:
    n = 2000
    eps = rng.standard_normal(n)
    y = _kernels.ar1_filter(eps, 1.0, 0.3, y0=1.0 / 0.7)
    X = np.column_stack([np.ones(n - 1), y[:-1]])
    yy = y[1:]
    beta, *_ = np.linalg.lstsq(X[:500], yy[:500], rcond=None)
    omega = X[:500].T @ X[:500] / 500
    dW = rng.standard_normal((256, 1, 2000)) / np.sqrt(1000)
    t = np.arange(2001) / 1000
    weight = np.where(t > 1, 1.0 / np.maximum(t, 1), 0.0)
    Xs, ys = X[:240], yy[:240]
    return {
        "ar1_filter": lambda nb: _kernels.ar1_filter(eps, 1.0, 0.3, 1.0, 0.6, 1000, 1.0, numba=nb),
        "garch_variance": lambda nb: _kernels.garch_variance(eps, 0.05, 0.1, 0.85, 1.0, numba=nb),
        "recursive_betas": lambda nb: _kernels.recursive_betas(X, yy, 500, numba=nb),
        "re_path": lambda nb: _kernels.re_path(X, yy, 500, beta, omega, 1.0, numba=nb),
        "me_path": lambda nb: _kernels.me_path(X, yy, 500, 250, beta, omega, 1.0, numba=nb),
        "bridge_sup": lambda nb: _kernels.bridge_sup(dW, 1000, weight, numba=nb),
        "partition_dp": lambda nb: _kernels.partition_dp(Xs, ys, 36, 3, numba=nb),
        "two_segment_ssr": lambda nb: _kernels.two_segment_ssr(eps, numba=nb),
    }


def _best(fn, nb: bool, repeats: int) -> float:
    fn(nb)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(nb)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)
    cases = _cases(np.random.default_rng(0))
    print(f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speed-up':>10}")
    for name, fn in cases.items():
        t_np = _best(fn, False, args.repeats)
        if NUMBA_ENABLED:
            t_nb = _best(fn, True, args.repeats)
            print(f"{name:<18}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<18}{1e3 * t_np:>12.3f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
