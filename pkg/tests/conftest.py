import json
from functools import lru_cache

import pytest
from hypothesis import HealthCheck, settings

from isoperim.measure import build_measure

settings.register_profile(
    "isoperim", deadline=None, max_examples=25, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("isoperim")


@lru_cache(maxsize=None)
def _cached(key):
    return build_measure(json.loads(key))


def measure(recipe):
    """Shared, immutable measures keyed by recipe."""
    return _cached(json.dumps(recipe, sort_keys=True))


@pytest.fixture(scope="session")
def expo():
    return measure({"family": "power", "p": 1})


@pytest.fixture(scope="session")
def gauss():
    # standard Gaussian: Phi = x^2 / 2
    return measure({"family": "power", "p": 2, "scale": 0.5})


@pytest.fixture(scope="session")
def quad2():
    return measure({"family": "power", "p": 2})


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
