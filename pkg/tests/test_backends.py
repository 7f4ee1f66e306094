"""The compiled and numpy kernels must agree to rounding."""
import numpy as np
import pytest

from seqbreak import _kernels
from seqbreak._accel import NUMBA_ENABLED, use_numba

pytestmark = pytest.mark.skipif(not NUMBA_ENABLED, reason="numba backend not active")

TOL = dict(rtol=1e-10, atol=1e-10)


def both(fn, *args, **kw):
    return fn(*args, numba=False, **kw), fn(*args, numba=True, **kw)


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(0)
    eps = rng.standard_normal(600)
    y = _kernels.ar1_filter(eps, 1.0, 0.3, y0=1 / 0.7, numba=False)
    X = np.column_stack([np.ones(599), y[:-1]])
    yy = y[1:] + np.where(np.arange(599) > 400, 1.0, 0.0)
    n = 200
    beta = np.linalg.lstsq(X[:n], yy[:n], rcond=None)[0]
    omega = X[:n].T @ X[:n] / n
    return rng, eps, X, yy, n, beta, omega


def test_ar1_filter(data):
    _, eps, *_ = data
    a, b = both(_kernels.ar1_filter, eps, 1.0, 0.3, 2.0, 0.7, 300, 0.5)
    np.testing.assert_allclose(a, b, **TOL)


def test_garch(data):
    _, eps, *_ = data
    np.testing.assert_allclose(*both(_kernels.garch_variance, eps, 0.05, 0.1, 0.85, 1.0), **TOL)
    for x, y in zip(*both(_kernels.garch_simulate, eps, 0.05, 0.1, 0.85, 1.0)):
        np.testing.assert_allclose(x, y, **TOL)


def test_recursive_betas(data):
    _, _, X, yy, n, *_ = data
    np.testing.assert_allclose(*both(_kernels.recursive_betas, X, yy, n), rtol=1e-9, atol=1e-10)


@pytest.mark.parametrize("rescale,euclid", [(False, False), (True, False), (False, True)])
def test_estimate_paths(data, rescale, euclid):
    _, _, X, yy, n, beta, omega = data
    np.testing.assert_allclose(*both(_kernels.re_path, X, yy, n, beta, omega, 1.0, rescale, euclid),
                               rtol=1e-9, atol=1e-10)
    a, b = both(_kernels.me_path, X, yy, n, 100, beta, omega, 1.0, rescale, euclid)
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-10, equal_nan=True)


@pytest.mark.parametrize("squared,lag", [(False, 0), (True, 0), (False, 25)])
def test_bridge_sup(data, squared, lag):
    rng = data[0]
    dW = rng.standard_normal((40, 2, 200)) / 10.0
    t = np.arange(201) / 100
    weight = np.where(t > 1, 1.0 / np.maximum(t, 1.0), 0.0)
    offset = np.where(t > 1, 0.1 * t, 0.0) if squared else None
    a, b = both(_kernels.bridge_sup, dW, 100, weight, offset, squared, lag, [150, 200])
    np.testing.assert_allclose(a, b, **TOL)


def test_partition_kernels(data):
    _, eps, X, yy, *_ = data
    Xs, ys = X[:120], yy[:120]
    np.testing.assert_allclose(*both(_kernels.ssr_row, Xs, ys, 0, 18), rtol=1e-8, atol=1e-9)
    (ca, ba), (cb, bb) = both(_kernels.partition_dp, Xs, ys, 18, 3)
    np.testing.assert_allclose(ca, cb, rtol=1e-8, atol=1e-9)
    np.testing.assert_array_equal(ba[:, -1], bb[:, -1])
    np.testing.assert_allclose(*both(_kernels.two_segment_ssr, eps), **TOL)


def test_override():
    assert use_numba(False) is False and use_numba(True) is True
