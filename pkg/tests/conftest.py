import os

import pytest

import smoothsvm as s

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session")
def benchmark():
    """The synthetic benchmark instance shared by the solver tests."""
    dataset, w_star = s.synthetic_dataset(2000, 100, 10, 0.0, 42)
    return dataset, w_star


@pytest.fixture(scope="session")
def benchmark_path():
    return os.path.join(FIXTURES, "benchmark.libsvm")


@pytest.fixture()
def tiny_path():
    return os.path.join(FIXTURES, "tiny.libsvm")
