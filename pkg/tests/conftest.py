import math
from pathlib import Path

import numpy as np
import pytest

from capvoronoi.io import parse_demand, parse_sites

DATA = Path(__file__).resolve().parents[1] / "src" / "capvoronoi" / "data"
EARTH_KM = 6371.0


def random_unit(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def well_separated(rng, n, min_angle=0.05):
    """Rejection-sample n unit vectors at least ``min_angle`` apart."""
    pts = []
    while len(pts) < n:
        x = random_unit(rng, 1)[0]
        if all(math.acos(min(1.0, float(x @ p))) > min_angle for p in pts):
            pts.append(x)
    return np.array(pts)


OCTAHEDRON = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)
TETRAHEDRON = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / math.sqrt(3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fig1():
    sites = parse_sites(DATA / "fig1_sites.csv")
    demand = parse_demand(DATA / "fig1_population.csv", "raster", EARTH_KM)
    return sites, demand
