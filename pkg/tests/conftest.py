import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from otsmooth.datasets import make_grid, make_ring
from otsmooth.potential import PotentialModel
from otsmooth.solver import SolverConfig, fit_height_vector

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_ACCEPTANCE = {}


class FittedToy:
    def __init__(self, X, spec, heights, trace, seconds):
        self.X = X
        self.spec = spec
        self.heights = heights
        self.trace = trace
        self.seconds = seconds
        self.model = PotentialModel(X, heights)


def _fit(maker, lr):
    X, spec = maker(256, 0)
    t0 = time.perf_counter()
    h, trace = fit_height_vector(X, cfg=SolverConfig(learning_rate=lr, seed=0))
    return FittedToy(X, spec, h, trace, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def ring_fit():
    return _fit(make_ring, 2e-4)


@pytest.fixture(scope="session")
def grid_fit():
    return _fit(make_grid, 1e-3)


@pytest.fixture
def record_acceptance():
    """Store a one-line verdict for the acceptance summary printed at the end of the run."""

    def record(key, passed, detail):
        _ACCEPTANCE[key] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: int(k[1:])):
        passed, detail = _ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if passed else 'FAIL'}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
