import json
from pathlib import Path

import numpy as np
import pytest

from jordan_lab.conjugacy import pullback_map, solve_conjugacy
from jordan_lab.exact_linalg import BASE_MATRIX
from jordan_lab.families import standard_phi
from jordan_lab.framing import build_framing
from jordan_lab.linearization import linear_data
from jordan_lab.periodic_orbits import continue_orbits, linear_orbits_up_to
from jordan_lab.torus_map import SmoothMap

DATA = Path(__file__).parent / "data"
EPS = 1e-3


@pytest.fixture(scope="session")
def oracles():
    return json.loads((DATA / "oracles.json").read_text())


@pytest.fixture(scope="session")
def lin():
    return linear_data(BASE_MATRIX)


@pytest.fixture(scope="session")
def linear_map():
    return SmoothMap(BASE_MATRIX, 0.0)


@pytest.fixture(scope="session")
def pullback():
    return pullback_map(standard_phi(), EPS, BASE_MATRIX)


@pytest.fixture(scope="session")
def seeds5():
    return linear_orbits_up_to(BASE_MATRIX, 5)


@pytest.fixture(scope="session")
def pullback_orbits(pullback, seeds5):
    return continue_orbits(pullback, seeds5)


@pytest.fixture(scope="session")
def pullback_u(pullback, lin, pullback_orbits):
    return solve_conjugacy(pullback, lin.proj, 12, 32, pin_point=pullback_orbits[0].points[0])


@pytest.fixture(scope="session")
def pullback_framing(pullback, pullback_u):
    return build_framing(pullback, pullback_u, 24, 11)


@pytest.fixture(scope="session")
def linear_framing(linear_map):
    return build_framing(linear_map, None, 16, 7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
