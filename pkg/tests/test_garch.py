import numpy as np
import pytest

from seqbreak import _kernels
from seqbreak.garch import GarchParams, garch_filter, garch_fit, standardized_residuals
from seqbreak.timeseries import DataError, TimeSeries


def simulate_garch(n, omega, alpha, beta, mu=0.0, seed=0):
    z = np.random.default_rng(seed).standard_normal(n + 500)
    eps, h = _kernels.garch_simulate(z, omega, alpha, beta, omega / (1 - alpha - beta))
    return mu + eps[500:], z[500:], h[500:]


def test_params_validation():
    with pytest.raises(ValueError):
        GarchParams(0.0, 0.0, 0.1, 0.8)
    with pytest.raises(ValueError):
        GarchParams(0.0, 0.1, -0.1, 0.8)
    with pytest.raises(ValueError):
        GarchParams(0.0, 0.1, 0.3, 0.7)
    assert GarchParams(0.0, 0.1, 0.1, 0.8).persistence == pytest.approx(0.9)


def test_iid_data_gives_flat_variance():
    y = np.random.default_rng(3).standard_normal(2000)
    fit = garch_fit(y)
    p = fit.params
    assert fit.converged
    se = fit.robust_se
    assert p.alpha < 2 * se["alpha"] + 0.02
    uncond = p.omega / (1 - p.alpha - p.beta)
    assert abs(uncond - y.var()) < 0.1
    assert np.std(fit.cond_var) / np.mean(fit.cond_var) < 0.1


def test_parameter_recovery_one_seed():
    y, _, _ = simulate_garch(5000, 0.05, 0.10, 0.85, seed=1)
    fit = garch_fit(y)
    truth = {"omega": 0.05, "alpha": 0.10, "beta": 0.85, "mu": 0.0}
    for k, v in truth.items():
        assert abs(getattr(fit.params, k) - v) < 3 * fit.robust_se[k], k
    assert fit.loglik >= fit.start_loglik
    assert fit.params.alpha + fit.params.beta < 1


def test_variance_replay_matches():
    y, _, _ = simulate_garch(1500, 0.1, 0.15, 0.7, mu=0.5, seed=2)
    fit = garch_fit(y)
    eps, h = garch_filter(y, fit.params, sigma2_init=fit.sigma2_init)
    # independent loop replay
    ref = np.empty_like(h)
    ref[0] = fit.sigma2_init
    e = y - fit.params.mu
    for t in range(1, y.size):
        ref[t] = fit.params.omega + fit.params.alpha * e[t - 1] ** 2 + fit.params.beta * ref[t - 1]
    np.testing.assert_allclose(fit.cond_var, ref, rtol=1e-10)
    np.testing.assert_allclose(fit.std_residuals, e / np.sqrt(ref), rtol=1e-10)
    assert np.all(fit.cond_var > 0)


def test_true_params_invert_generator():
    y, z, h = simulate_garch(800, 0.05, 0.1, 0.85, seed=4)
    params = GarchParams(0.0, 0.05, 0.1, 0.85)
    eps, hh = garch_filter(y, params, sigma2_init=h[0])
    np.testing.assert_allclose(eps / np.sqrt(hh), z, atol=1e-10)


def test_standardized_variance_near_one():
    y, _, _ = simulate_garch(2000, 0.05, 0.1, 0.85, seed=5)
    res = standardized_residuals(garch_fit(y))
    assert isinstance(res, TimeSeries)
    assert 0.9 <= res.values.var() <= 1.1


def test_ar_garch_joint_fit():
    z = np.random.default_rng(6).standard_normal(3000)
    eps, _ = _kernels.garch_simulate(z, 0.05, 0.1, 0.85, 1.0)
    y = _kernels.ar1_filter(eps, 0.2, 0.5, y0=0.4)
    fit = garch_fit(TimeSeries(y, labels=[str(i) for i in range(3000)]), with_ar=True)
    assert abs(fit.params.rho - 0.5) < 3 * fit.robust_se["rho"]
    assert abs(fit.params.mu - 0.2) < 3 * fit.robust_se["mu"]
    assert fit.std_residuals.size == 2999
    assert standardized_residuals(fit).labels[0] == "1"


def test_guards():
    with pytest.raises(DataError):
        garch_fit(np.zeros(100))
    with pytest.raises(DataError):
        garch_fit(np.random.default_rng(0).standard_normal(30))


def test_unconverged_needs_override():
    y, _, _ = simulate_garch(300, 0.05, 0.1, 0.85, seed=7)
    fit = garch_fit(y)
    forced = type(fit)(**{**fit.__dict__, "converged": False})
    with pytest.raises(ValueError):
        standardized_residuals(forced)
    assert len(standardized_residuals(forced, allow_unconverged=True)) == 300
