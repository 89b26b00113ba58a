import numpy as np
import pytest

from arfima_misspec.models.arfima import ArfimaSpec, FamilySpec, MisSpecPair
from arfima_misspec.services.pseudo_true import example_pair, solve_pseudo_true


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow Monte Carlo tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def long_memory_pair():
    """MA(1) true process with theta0 = -0.7 fitted by fractional noise (d* > 0.25)."""
    return example_pair(-0.7)


@pytest.fixture(scope="session")
def short_range_pair():
    """theta0 = -0.3 fitted by fractional noise (d* < 0.25)."""
    return example_pair(-0.3)


@pytest.fixture(scope="session")
def ar_family_pair():
    """theta0 = -0.7 fitted by ARFIMA(1,d,0)."""
    return example_pair(-0.7, ar_order=1)


@pytest.fixture(scope="session")
def long_memory_solution(long_memory_pair):
    return solve_pseudo_true(long_memory_pair)


@pytest.fixture(scope="session")
def short_range_solution(short_range_pair):
    return solve_pseudo_true(short_range_pair)


@pytest.fixture(scope="session")
def correct_pair():
    """Fractional noise fitted by fractional noise."""
    return MisSpecPair(tdgp=ArfimaSpec(p=0, d=0.2, q=0), family=FamilySpec(p=0, q=0))
