import math

import numpy as np
import pytest

from capvoronoi.errors import DegenerateTriangle
from capvoronoi.geometry import (
    GeoPoint,
    Sphere,
    arc_points,
    central_angle,
    circumcenter,
    geo_to_unit,
    geodesic_distance,
    latlon_to_unit,
    orient3d,
    pairwise_distances,
    tangent_basis,
    unit_to_geo,
    unit_to_latlon,
)

from conftest import random_unit


@pytest.mark.parametrize(
    "lat,lon,expected",
    [(0, 0, (1, 0, 0)), (math.pi / 2, 0, (0, 0, 1)), (0, math.pi / 2, (0, 1, 0))],
)
def test_geo_to_unit_axes(lat, lon, expected):
    assert np.allclose(geo_to_unit(GeoPoint(lat, lon)), expected, atol=1e-15)


def test_unit_to_geo_pole_and_origin():
    north = unit_to_geo(np.array([0.0, 0.0, 1.0]))
    assert north.lat == math.pi / 2 and north.lon == 0.0
    p = unit_to_geo(np.array([1.0, 0.0, 0.0]))
    assert (p.lat, p.lon) == (0.0, 0.0)


def test_geopoint_validation_and_wrapping():
    with pytest.raises(ValueError):
        GeoPoint(2.0, 0.0)
    assert GeoPoint(0.0, 3 * math.pi).lon == pytest.approx(math.pi)
    assert GeoPoint(0.0, -math.pi).lon == pytest.approx(math.pi)
    assert GeoPoint(-math.pi / 2, 1.0).lon == 0.0
    lat, lon = GeoPoint.from_degrees(37.5, -122.25).to_degrees()
    assert (lat, lon) == pytest.approx((37.5, -122.25))


def test_round_trip_1000_points(rng):
    v = random_unit(rng, 1000)
    lat, lon = unit_to_latlon(v)
    back = latlon_to_unit(lat, lon)
    assert central_angle(v, back).max() <= 1e-12
    for x in v[:50]:
        assert central_angle(x, geo_to_unit(unit_to_geo(x))) <= 1e-12


def test_distance_examples():
    a = np.array([1.0, 0.0, 0.0])
    assert geodesic_distance(a, a) == 0.0
    assert geodesic_distance(a, -a, Sphere(2.0)) == pytest.approx(2 * math.pi, abs=1e-15)
    assert geodesic_distance(a, np.array([0.0, 1.0, 0.0])) == pytest.approx(math.pi / 2, abs=1e-15)


def test_small_angles_are_accurate():
    a = np.array([1.0, 0.0, 0.0])
    b = latlon_to_unit(1e-9, 0.0)
    assert geodesic_distance(a, b) == pytest.approx(1e-9, rel=1e-6)


def test_sphere_rejects_bad_radius():
    with pytest.raises(ValueError):
        Sphere(0.0)
    with pytest.raises(ValueError):
        Sphere(-1.0)


def test_pairwise_matches_scalar(rng):
    x, p = random_unit(rng, 40), random_unit(rng, 7)
    s = Sphere(3.0)
    m = pairwise_distances(x, p, s)
    for i in range(40):
        for j in range(7):
            assert m[i, j] == pytest.approx(geodesic_distance(x[i], p[j], s), abs=1e-14)


def test_circumcenter_symmetric_triple():
    c = circumcenter(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0]))
    assert np.allclose(c, np.ones(3) / math.sqrt(3))


def test_circumcenter_equidistant(rng):
    for _ in range(200):
        a, b, c = random_unit(rng, 3)
        o = circumcenter(a, b, c)
        d = [central_angle(o, x) for x in (a, b, c)]
        assert max(d) - min(d) <= 1e-9


def test_circumcenter_degenerate():
    a = np.array([1.0, 0, 0])
    with pytest.raises(DegenerateTriangle):
        circumcenter(a, a, np.array([0, 1.0, 0]))


def test_orient3d_signs():
    a, b, c = np.eye(3)
    d = -np.ones(3) / math.sqrt(3)
    s = orient3d(a, b, c, d)
    assert s != 0
    assert orient3d(b, c, a, d) == s and orient3d(c, a, b, d) == s
    assert orient3d(b, a, c, d) == -s
    assert orient3d(a, b, c, (a + b + c) / 3) == 0


def test_tangent_basis_is_right_handed(rng):
    for p in random_unit(rng, 20):
        e1, e2 = tangent_basis(p)
        assert abs(e1 @ p) < 1e-14 and abs(e2 @ p) < 1e-14
        assert np.allclose(np.cross(e1, e2), p, atol=1e-14)


def test_arc_points_spacing_and_route():
    a = np.array([1.0, 0, 0])
    b = np.array([0, 1.0, 0])
    pts = arc_points(a, b, np.array([-1.0, -1.0, 0]) / math.sqrt(2), math.radians(1.0))
    assert np.allclose(pts[0], a) and np.allclose(pts[-1], b)
    steps = central_angle(pts[:-1], pts[1:])
    assert steps.max() <= math.radians(1.0) + 1e-12
    assert math.fsum(steps) == pytest.approx(1.5 * math.pi, rel=1e-12)
