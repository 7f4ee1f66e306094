import numpy as np
import pytest

from seqbreak.linreg import ar1_design, mean_design
from seqbreak.retro import (F_CAP, bai_perron, exhaustive_partition, min_segment, retro_cusum_sq,
                            single_break_ls, sup_f)
from seqbreak.timeseries import TimeSeries


def _scan(y):
    best, arg = np.inf, None
    for k in range(1, y.size):
        s = ((y[:k] - y[:k].mean()) ** 2).sum() + ((y[k:] - y[k:].mean()) ** 2).sum()
        if arg is None or s < best - 1e-12 * max(best, 1):
            best, arg = s, k
    return arg, best


@pytest.mark.parametrize("N", [10, 57, 400, 2000])
def test_single_break_matches_scan(N):
    rng = np.random.default_rng(N)
    y = rng.standard_normal(N) + np.where(np.arange(N) >= N // 3, 0.7, 0.0)
    est = single_break_ls(y)
    k, s = _scan(y)
    assert est.breakpoints == (k,)
    assert est.ssr == pytest.approx(s, rel=1e-9)


def test_single_break_edge_cases():
    assert single_break_ls(np.array([0, 0, 0, 5, 5, 5.0])).breakpoints == (3,)
    # every split of a constant series ties at zero; the first one wins
    assert single_break_ls(np.full(8, 2.0)).breakpoints == (1,)
    ts = TimeSeries(np.array([0, 0, 0, 5, 5, 5.0]), labels=list("abcdef"))
    assert single_break_ls(ts).labels == ("c",)


@pytest.mark.parametrize("kind,N,v", [("mean", 40, 1), ("mean", 48, 2), ("mean", 60, 3),
                                      ("ar1", 45, 1), ("ar1", 55, 2), ("ar1", 60, 3)])
def test_dp_matches_exhaustive(kind, N, v, backend):
    rng = np.random.default_rng(N + v)
    y = rng.standard_normal(N).cumsum() * 0.3 + np.repeat(rng.normal(0, 2, 4), -(-N // 4))[:N]
    design = mean_design(y) if kind == "mean" else ar1_design(y)
    h = min_segment(design.rows, 0.15, design.p)
    ests = bai_perron(y, max_breaks=v, trim=0.15, design_kind=kind, numba=backend)
    ssr, cuts = exhaustive_partition(design, h, v)
    drop = 1 if kind == "ar1" else 0
    assert ests[-1].ssr == pytest.approx(ssr, rel=1e-8, abs=1e-9)
    assert ests[-1].breakpoints == tuple(c + drop for c in cuts)


def test_two_noiseless_shifts():
    y = np.concatenate([np.zeros(30), np.full(30, 4.0), np.full(40, -2.0)])
    est = bai_perron(y, max_breaks=2, trim=0.1)
    assert est[1].breakpoints == (30, 60)
    assert est[1].ssr == pytest.approx(0.0, abs=1e-9)
    assert [f.beta[0] for f in est[1].per_regime] == pytest.approx([0.0, 4.0, -2.0])


def test_one_break_partition_agrees_with_single_break():
    rng = np.random.default_rng(3)
    y = rng.standard_normal(200) + np.where(np.arange(200) >= 120, 1.0, 0.0)
    k = single_break_ls(y).breakpoints[0]
    assert 30 <= k <= 170
    assert bai_perron(y, max_breaks=1, trim=0.15)[0].breakpoints == (k,)


def test_infeasible_trim():
    with pytest.raises(ValueError):
        bai_perron(np.arange(20.0), trim=0.1)
    with pytest.raises(ValueError):
        bai_perron(np.random.default_rng(0).standard_normal(100), max_breaks=7, trim=0.15)
    with pytest.raises(ValueError):
        sup_f(np.arange(10.0), trim=0.2, design_kind="ar1")


def test_sup_f_cap_and_argmax():
    y = np.concatenate([np.zeros(50), np.ones(50)])
    out = sup_f(y)
    assert out["stat"] == F_CAP and out["argmax_index"] == 50


def test_sup_f_affine_invariance():
    rng = np.random.default_rng(4)
    y = rng.standard_normal(150) + np.where(np.arange(150) > 90, 0.8, 0.0)
    for kind in ("mean", "ar1"):
        a, b = sup_f(y, design_kind=kind), sup_f(3.0 * y - 7.0, design_kind=kind)
        np.testing.assert_allclose(a["F"], b["F"], rtol=1e-8)
        assert a["argmax_index"] == b["argmax_index"]


def test_sup_f_matches_direct_refits():
    rng = np.random.default_rng(5)
    y = rng.standard_normal(80)
    out = sup_f(y, design_kind="ar1", critical_value=100.0)
    d = ar1_design(y)
    h = min_segment(d.rows, 0.15, 2)

    def ssr(X, z):
        r = z - X @ np.linalg.lstsq(X, z, rcond=None)[0]
        return r @ r

    s0 = ssr(d.X, d.y)
    direct = [((s0 - (s1 := ssr(d.X[:k], d.y[:k]) + ssr(d.X[k:], d.y[k:]))) / 2) / (s1 / (d.rows - 4))
              for k in range(h, d.rows - h + 1)]
    np.testing.assert_allclose(out["F"], direct, rtol=1e-8)
    assert out["p_flag"] is False


def test_sup_f_size_iid():
    # 5% asymptotic critical value for one break, one regressor, 15% trimming
    rng = np.random.default_rng(6)
    rej = np.mean([sup_f(rng.standard_normal(200))["stat"] > 8.85 for _ in range(300)])
    assert 0.01 <= rej <= 0.10


def test_retro_cusum_sq():
    path, _ = retro_cusum_sq(np.full(50, 1.0), design_kind="mean")
    assert np.all(path.statistic == 0)
    rng = np.random.default_rng(7)
    e = rng.standard_normal(400)
    e[250:] *= np.sqrt(2.0)
    path, k = retro_cusum_sq(e, design_kind="mean")
    assert abs(k - 250) <= 40
    assert path.statistic[-1] == pytest.approx(0.0, abs=1e-9)
