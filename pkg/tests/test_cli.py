import json
import subprocess
import sys

import numpy as np
import pytest

from seqbreak.cli import main
from seqbreak.montecarlo import DgpSpec, simulate_values


@pytest.fixture
def series_csv(tmp_path):
    y = simulate_values(DgpSpec(break_kind="mu_shift", break_to=6.0, break_loc=0.25), 100, 2.0, 1)
    path = tmp_path / "y.csv"
    lines = ["date,value"] + [f"p{i},{float(v)!r}" for i, v in enumerate(y)]
    path.write_text("\n".join(lines) + "\n")
    return path


def _cfg(tmp_path, **over):
    cfg = {
        "dgp": {"mu": 1.0, "rho": 0.3, "break_kind": "mu_shift", "break_to": 2.0, "break_loc": 0.25},
        "detector": {"kind": "ols-cusum"},
        "boundary": {"kind": "b3", "lambda": 1.577},
        "sample": {"n": 50, "T": 2.0},
        "replications": 120,
        "seed": 4,
        "outputs": {"report": "report.json"},
    }
    cfg.update(over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def _read(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_monitor_detects_and_writes(tmp_path, series_csv, capsys):
    rc = main(["monitor", "--input", str(series_csv), "--header", "--column", "value", "--label-column", "date",
               "--n", "100", "--lambda", "1.577", "--out-dir", str(tmp_path), "--out", "path.csv",
               "--report", "rep.json"])
    assert rc == 0
    rep = json.loads((tmp_path / "rep.json").read_text())
    assert rep["detected"] and 25 < rep["tau"] <= 40
    assert rep["tau_label"] == f"p{99 + rep['tau']}"
    rows = (tmp_path / "path.csv").read_text().splitlines()
    assert len(rows) == rep["tau"] + 1


def test_fit_garch_retro(tmp_path, series_csv):
    base = ["--input", str(series_csv), "--header", "--column", "value", "--out-dir", str(tmp_path)]
    assert main(["fit", *base, "--n", "100", "--out", "fit.json"]) == 0
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert len(fit["beta"]) == 2 and fit["hac_lags"] == 12
    assert main(["garch-fit", *base, "--ar", "--allow-unconverged", "--residuals", "z.csv", "--out", "g.json"]) == 0
    assert "params" in json.loads((tmp_path / "g.json").read_text())
    assert main(["retro", *base, "--method", "single", "--out", "s.json"]) == 0
    assert abs(json.loads((tmp_path / "s.json").read_text())["breakpoints"][0] - 125) <= 3
    assert main(["retro", *base, "--method", "baiperron", "--max-breaks", "2", "--regimes", "r.csv",
                 "--out", "bp.json"]) == 0
    assert len((tmp_path / "r.csv").read_text().splitlines()) == 4
    assert main(["retro", *base, "--method", "supf", "--critical-value", "8.85", "--out", "f.json"]) == 0
    assert json.loads((tmp_path / "f.json").read_text())["p_flag"] is True
    assert main(["retro", *base, "--method", "cusumsq", "--design", "ar1", "--path-out", "c.csv",
                 "--out", "c.json"]) == 0


def test_critical_values_command(tmp_path):
    rc = main(["simulate-critical-values", "--reps", "500", "--steps-per-unit", "100", "--horizons", "1,2",
               "--alphas", "0.05", "--out-dir", str(tmp_path), "--out", "cv.csv", "--threads", "1"])
    assert rc == 0
    header, row = (tmp_path / "cv.csv").read_text().splitlines()
    assert header == "alpha,T=1,T=2"
    vals = [float(v) for v in row.split(",")[1:]]
    assert vals[0] < vals[1]


@pytest.mark.parametrize("cmd", ["mc-power", "mc-arl"])
def test_mc_outputs_identical_across_threads(tmp_path, cmd):
    cfg = _cfg(tmp_path)
    d1, d3 = tmp_path / "t1", tmp_path / "t3"
    assert main([cmd, "--config", str(cfg), "--threads", "1", "--out-dir", str(d1)]) == 0
    assert main([cmd, "--config", str(cfg), "--threads", "3", "--out-dir", str(d3)]) == 0
    a, b = _read(d1), _read(d3)
    assert a == b
    assert f"{cmd}.csv" in a and "report.json" in a
    if cmd == "mc-arl":
        assert "density.csv" in a


def test_mc_size_and_curve(tmp_path):
    cfg = _cfg(tmp_path, dgp={"mu": 1.0, "rho": 0.3}, replications=50)
    assert main(["mc-size", "--config", str(cfg), "--out-dir", str(tmp_path / "s")]) == 0
    cfg = _cfg(tmp_path, sample={"n_grid": [30, 60]}, replications=40,
               boundary={"kind": "b6", "lambda": 2.386, "gamma": 0.25})
    assert main(["mc-curve", "--config", str(cfg), "--out-dir", str(tmp_path / "c")]) == 0
    assert len((tmp_path / "c" / "curve.csv").read_text().splitlines()) == 3
    # size needs a stable process: usage error
    cfg = _cfg(tmp_path, replications=5)
    assert main(["mc-size", "--config", str(cfg), "--out-dir", str(tmp_path / "bad")]) == 1


def test_seed_sources(tmp_path, monkeypatch):
    cfg = _cfg(tmp_path)
    raw = json.loads(cfg.read_text())
    del raw["seed"]
    cfg.write_text(json.dumps(raw))
    monkeypatch.setenv("SEQBREAK_SEED", "4")
    assert main(["mc-power", "--config", str(cfg), "--out-dir", str(tmp_path / "env")]) == 0
    monkeypatch.delenv("SEQBREAK_SEED")
    assert main(["mc-power", "--config", str(cfg), "--seed", "4", "--out-dir", str(tmp_path / "flag")]) == 0
    assert main(["mc-power", "--config", str(cfg), "--seed", "5", "--out-dir", str(tmp_path / "other")]) == 0
    assert _read(tmp_path / "env") == _read(tmp_path / "flag")
    assert _read(tmp_path / "env") != _read(tmp_path / "other")
    monkeypatch.setenv("SEQBREAK_SEED", "abc")
    assert main(["mc-power", "--config", str(cfg), "--out-dir", str(tmp_path / "x")]) == 1


def test_usage_errors_write_nothing(tmp_path, series_csv):
    out = tmp_path / "o"
    with pytest.raises(SystemExit) as exc:
        main(["monitor", "--input", str(series_csv), "--n", "100", "--bogus", "--out-dir", str(out)])
    assert exc.value.code == 1
    assert not out.exists()
    with pytest.raises(SystemExit) as exc:
        main(["monitor", "--input", str(series_csv), "--n", "100", "--threads", "0"])
    assert exc.value.code == 1


@pytest.mark.parametrize("patch", [{"extra": 1}, {"detector": {"kind": "nope"}}, {"sample": {"n": 1}},
                                   {"dgp": {"rho": 1.5}}])
def test_schema_rejections(tmp_path, patch):
    cfg = _cfg(tmp_path, **patch)
    assert main(["mc-power", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 1
    assert not (tmp_path / "o").exists()


def test_missing_and_malformed_config(tmp_path):
    assert main(["mc-power", "--config", str(tmp_path / "none.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["mc-power", "--config", str(bad)]) == 1


def test_compute_errors_exit_2(tmp_path):
    flat = tmp_path / "flat.csv"
    flat.write_text("\n".join(["1.0"] * 80) + "\n")
    assert main(["monitor", "--input", str(flat), "--n", "40"]) == 2
    assert main(["monitor", "--input", str(tmp_path / "missing.csv"), "--n", "40"]) == 2
    short = tmp_path / "short.csv"
    short.write_text("\n".join(str(float(v)) for v in np.arange(30)) + "\n")
    assert main(["monitor", "--input", str(short), "--n", "40"]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "seqbreak", "reproduce", "table1", "--scale", "100",
                        "--steps-per-unit", "100", "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    lines = (tmp_path / "table1.csv").read_text().splitlines()
    assert lines[0].startswith("alpha,T=1,T=2") and len(lines) == 3
    r = subprocess.run([sys.executable, "-m", "seqbreak", "nope"], capture_output=True, text=True)
    assert r.returncode == 1
