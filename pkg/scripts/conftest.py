# scripts/conftest.py
import os

import hypothesis
import numpy as np
import pytest

from scripts.helpers import sample_path
from services import generators
from services.graph_store import Graph, load_graph

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=5)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fast"))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-size runs (shrunk unless GRAPHWEAVE_FULL_ACCEPTANCE=1)")


@pytest.fixture
def path4() -> Graph:
    return load_graph(sample_path("path4.el"))


@pytest.fixture
def two_triangles() -> Graph:
    return load_graph(sample_path("two_triangles.el"))


@pytest.fixture
def small_weighted() -> Graph:
    return load_graph(sample_path("small.wel"))


@pytest.fixture
def ratings() -> Graph:
    return load_graph(sample_path("ratings.wel"))


@pytest.fixture(scope="session")
def rmat_small() -> Graph:
    return generators.rmat(256, 2048, seed=7, symmetric=False)


@pytest.fixture(scope="session")
def rmat_symmetric() -> Graph:
    return generators.rmat(256, 1024, seed=3, symmetric=True)


@pytest.fixture(scope="session")
def rmat_weighted() -> Graph:
    return generators.rmat(200, 1600, seed=11, symmetric=False, weights=(1, 9))
