import numpy as np
import pytest

from cfinsler.catalog import builtin_metric
from cfinsler.classify import SamplerConfig, sample_sites


@pytest.fixture(scope="session")
def metrics():
    """Compiled builtins, shared so symbolic derivatives are built once."""
    cache = {}

    def get(name, n=None):
        key = (name, n)
        if key not in cache:
            cache[key] = builtin_metric(name, n).compile()
        return cache[key]

    return get


def unit_sites(metric, count, seed=0):
    return sample_sites(metric, SamplerConfig(samples=count, seed=seed))


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        title, passed, detail = RESULTS[number]
        terminalreporter.write_line(
            f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} ({detail})")
