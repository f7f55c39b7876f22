import sys
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from biharm4 import classify as cl
from biharm4 import grid as gr
from biharm4 import waveop as wo

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_grid():
    return gr.build_grid(16, 8.0)


@pytest.fixture(scope="session")
def fixture_grid():
    return gr.build_grid(48, 8.0)


@pytest.fixture(scope="session")
def well(small_grid):
    return gr.gaussian_well(small_grid, depth=0.05)


@pytest.fixture(scope="session")
def sector(well):
    return wo.RadialSector.from_potential(well)


_CASCADES = {}


@pytest.fixture(scope="session")
def fixture_cascade(fixture_grid):
    """Memoized (Fixture, SingularityReport) for each engineered fixture kind."""

    def get(kind):
        if kind not in _CASCADES:
            fx = gr.engineered_resonance_fixture(fixture_grid, kind)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                _CASCADES[kind] = (fx, cl.cascade(fx.potential))
        return _CASCADES[kind]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
