import math

import numpy as np
import pytest
from scipy import optimize

from seqbreak.boundaries import (
    Boundary, BoundaryKind, DomainError, closed_form_crossing, evaluate, robbins_check, threshold, unit_shape,
)

LINEAR = ["b2", "b3", "b4", "b5", "b7", "b8", "b9"]


def test_b3_and_b2_values():
    assert evaluate(Boundary("b3", 1.577), 2.0) == pytest.approx(3.154)
    assert evaluate(Boundary("b2", 3.15), 1.0) == 0.0


def test_formulas():
    t = np.array([1.7, 2.0, 5.0])
    f = 1.618
    np.testing.assert_allclose(evaluate(Boundary("b2", 2.0), t), 2 * np.sqrt(t * (t - 1)))
    np.testing.assert_allclose(evaluate(Boundary("b4", 2.0), t), 2 * t**2)
    np.testing.assert_allclose(evaluate(Boundary("b5", 2.0), t), 2 * (t**2 - t + 0.1))
    np.testing.assert_allclose(evaluate(Boundary("b7", 2.0), t), 2 * (t * (t - 0.5)) ** 0.25)
    np.testing.assert_allclose(evaluate(Boundary("b8", 2.0), t), 2 * (t * (t - f)) ** f)
    np.testing.assert_allclose(evaluate(Boundary("b9", 2.0), t), 2 * (t / (t - f)) ** f)
    b1 = Boundary("b1", 7.78)
    np.testing.assert_allclose(evaluate(b1, t), np.sqrt(t * (t - 1) * (7.78 + np.log(t / (t - 1)))))
    lit = Boundary("b1", 2.0, b1_squared=False)
    np.testing.assert_allclose(evaluate(lit, t), np.sqrt(t * (t - 1) * (4.0 + np.log(t / (t - 1)))))
    k = np.array([1.0, 10.0, 50.0])
    b6 = Boundary("b6", 2.386, gamma=0.25, n=100)
    np.testing.assert_allclose(evaluate(b6, k), 2.386 * 10 * (1 + k / 100) * (100 / (k + 100)) ** 0.25)


def test_b1_limit_at_start():
    assert evaluate(Boundary("b1", 7.78), 1.0) == 0.0
    assert evaluate(Boundary("b1", 7.78), 1.0 + 1e-9) < 1e-3


@pytest.mark.parametrize("kind", LINEAR + ["b6"])
def test_linear_in_lambda(kind):
    t = np.linspace(1.7, 9.0, 40)
    b = Boundary(kind, 1.0, n=100)
    np.testing.assert_allclose(evaluate(b.with_lambda(3.7), t), 3.7 * evaluate(b, t), rtol=1e-13)
    if kind != "b6":
        np.testing.assert_allclose(unit_shape(kind, t), evaluate(b, t))


@pytest.mark.parametrize("kind", [k.value for k in BoundaryKind])
def test_continuity_and_positivity(kind):
    b = Boundary(kind, 1.0, n=50)
    t0 = 2.5
    gaps = [abs(evaluate(b, t0 + d) - evaluate(b, t0)) for d in (1e-2, 1e-4, 1e-6)]
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-4
    assert np.all(evaluate(b, np.linspace(2.0, 10.0, 20)) > 0)


def test_b6_monotone_in_gamma_and_n():
    k = np.array([0.5, 5.0, 50.0, 500.0])
    vals = [evaluate(Boundary("b6", 2.386, gamma=g, n=100), k) for g in (0.05, 0.25, 0.45)]
    assert np.all(vals[0] > vals[1]) and np.all(vals[1] > vals[2])
    # increasing in n at a fixed point of the scaled clock t = 1 + k/n
    t = np.array([1.01, 1.5, 2.0, 6.0])
    ns = [evaluate(Boundary("b6", 2.386, n=n), n * (t - 1)) for n in (50, 100, 400)]
    assert np.all(ns[0] < ns[1]) and np.all(ns[1] < ns[2])


def test_domain_errors():
    with pytest.raises(DomainError):
        evaluate(Boundary("b8", 1.0), 1.5)
    with pytest.raises(DomainError):
        evaluate(Boundary("b9", 1.0), 1.618)
    with pytest.raises(DomainError):
        evaluate(Boundary("b1", 7.78), 0.9)


def test_invariants():
    with pytest.raises(ValueError):
        Boundary("b3", 0.0)
    with pytest.raises(ValueError):
        Boundary("b6", 1.0)
    with pytest.raises(ValueError):
        Boundary("b6", 1.0, gamma=0.7, n=10)
    with pytest.raises(ValueError):
        Boundary("b10", 1.0)
    assert Boundary.default("b5").lam == 6.043
    with pytest.raises(ValueError):
        Boundary.default("b7")


def test_threshold_adapter():
    n = 100
    k = np.arange(1, 201)
    np.testing.assert_allclose(threshold(Boundary("b3", 1.577), k, n), 1.577 * (1 + k / n))
    b6 = Boundary("b6", 2.386, n=n)
    np.testing.assert_allclose(threshold(b6, k, n), evaluate(b6, k) / math.sqrt(n))
    t = 1 + k / n
    np.testing.assert_allclose(threshold(b6, k, n), 2.386 * t ** 0.75, rtol=1e-12)
    b8 = threshold(Boundary("b8", 1.0), k, n)
    assert np.all(np.isinf(b8[: 61])) and np.all(np.isfinite(b8[62:]))


def test_robbins_b1_passes():
    rep = robbins_check(Boundary("b1", 7.78), np.linspace(1.01, 100, 20000), t0=1.01)
    assert all(v.passed for v in rep.values()), rep


def test_robbins_b4_fails_ii():
    rep = robbins_check(Boundary("b4", 2.49), np.linspace(0.01, 100, 20000), t0=1.0)
    assert not rep["cond_ii"].passed
    assert rep["cond_ii"].first_violation is not None
    assert rep["cond_i"].passed


def test_robbins_flags_slow_tail():
    rep = robbins_check(Boundary("b3", 1.0), np.linspace(1, 1e4, 50000), t0=1.0)
    assert rep["cond_iii"].passed
    # b7 grows like sqrt(t), leaving an integrand of order 1/t whose integral diverges
    rep = robbins_check(Boundary("b7", 1.0), np.geomspace(1.5, 1e6, 50000), t0=1.5)
    assert not rep["cond_iii"].passed


def test_closed_forms():
    lam = math.sqrt(-2 * math.log(0.05))
    assert lam == pytest.approx(2.4477, abs=1e-4)
    assert closed_form_crossing("sqrt_t1_log", 2.4477) == pytest.approx(0.05, abs=1e-4)
    assert closed_form_crossing("sqrt_t_log", 1e-9) == pytest.approx(1.0, abs=1e-6)
    assert closed_form_crossing("sqrt_t_log", 30.0) < 1e-100
    assert closed_form_crossing("sqrt_t1_log", 30.0) < 1e-100
    root = optimize.brentq(lambda x: closed_form_crossing("sqrt_t1_log", x) - 0.05, 1, 5)
    assert root == pytest.approx(lam, abs=1e-10)
    with pytest.raises(ValueError):
        closed_form_crossing("other", 1.0)
