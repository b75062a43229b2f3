import numpy as np
import pytest
from hypothesis import strategies as st

from bcoh.eightmodel import DEFAULT_GEOMETRY
from bcoh.homotopy import default_cuts
from bcoh.words import reduce

CODES = st.sampled_from([1, -1, 2, -2])


def words(max_len=8):
    return st.lists(CODES, max_size=max_len).map(reduce)


@pytest.fixture(scope="session")
def geom():
    return DEFAULT_GEOMETRY


@pytest.fixture(scope="session")
def cuts(geom):
    return default_cuts(geom)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[key])
