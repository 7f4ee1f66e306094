import numpy as np
import pytest

from seqbreak import _kernels
from seqbreak._accel import NUMBA_ENABLED


def ar1_sample(n, mu=1.0, rho=0.3, seed=0, burn=200):
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal(n + burn)
    return _kernels.ar1_filter(eps, mu, rho, y0=mu / (1 - rho))[burn:]


@pytest.fixture
def ar1():
    return ar1_sample


BACKENDS = [False] + ([True] if NUMBA_ENABLED else [])


@pytest.fixture(params=BACKENDS, ids=lambda b: "numba" if b else "numpy")
def backend(request):
    return request.param


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
