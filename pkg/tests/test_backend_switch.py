import os
import subprocess
import sys


def test_environment_flag_disables_numba():
    env = {**os.environ, "SEQBREAK_DISABLE_NUMBA": "1"}
    code = ("import seqbreak._accel as a, seqbreak._kernels as k, numpy as np\n"
            "assert not a.NUMBA_ENABLED\n"
            "try:\n    a.use_numba(True)\nexcept RuntimeError:\n    pass\nelse:\n    raise SystemExit(3)\n"
            "print(k.two_segment_ssr(np.arange(6.0)).size)")
    r = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert r.stdout.strip() == "5"


def test_benchmark_runs_without_numba():
    env = {**os.environ, "SEQBREAK_DISABLE_NUMBA": "1"}
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    r = subprocess.run([sys.executable, os.path.join(root, "benchmarks", "bench_kernels.py"), "--repeats", "1"],
                       env=env, capture_output=True, text=True, timeout=300)
    assert r.returncode == 0, r.stderr
    lines = r.stdout.strip().splitlines()
    assert lines[0].split()[0] == "kernel" and len(lines) == 9
