"""Randomized invariants driven by hypothesis."""

import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from capvoronoi.demand import DiscreteDemand
from capvoronoi.geometry import GeoPoint, Sphere, central_angle, geo_to_unit, geodesic_distance, unit_to_geo
from capvoronoi.solver import solve
from capvoronoi.transport import TransportInstance, brute_force, check_exchange_optimality, solve_exact
from capvoronoi.voronoi import Site, delaunay_triangulation, spherical_voronoi
from capvoronoi.weighted import build_weighted_diagram, edge_label, trace_boundary, weighted_argmin

from conftest import well_separated

lat_st = st.floats(-math.pi / 2, math.pi / 2, allow_nan=False)
lon_st = st.floats(-math.pi, math.pi, allow_nan=False)
seed_st = st.integers(0, 2**32 - 1)
radius_st = st.floats(0.1, 1e4)
FAST = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@FAST
@given(lat_st, lon_st)
def test_geo_round_trip(lat, lon):
    v = geo_to_unit(GeoPoint(lat, lon))
    assert abs(np.linalg.norm(v) - 1) < 1e-15
    assert central_angle(v, geo_to_unit(unit_to_geo(v))) <= 1e-12


@FAST
@given(lat_st, lon_st, lat_st, lon_st, lat_st, lon_st, radius_st)
def test_metric_axioms(a1, o1, a2, o2, a3, o3, r):
    s = Sphere(r)
    a, b, c = (geo_to_unit(GeoPoint(x, y)) for x, y in ((a1, o1), (a2, o2), (a3, o3)))
    ab, ba = geodesic_distance(a, b, s), geodesic_distance(b, a, s)
    assert ab == ba
    assert 0 <= ab <= math.pi * r * (1 + 1e-15)
    assert geodesic_distance(a, c, s) <= ab + geodesic_distance(b, c, s) + 1e-12 * r


@FAST
@given(seed_st, st.integers(2, 12), st.sampled_from([-1.0, 1.0, 10.0]))
def test_argmin_shift_invariant(seed, n, c):
    rng = np.random.default_rng(seed)
    p = well_separated(rng, n)
    x = rng.normal(size=(50, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    d = rng.uniform(0, 0.5, n)
    assert np.array_equal(weighted_argmin(x, p, d), weighted_argmin(x, p, d + c))


@settings(max_examples=25, deadline=None)
@given(seed_st, st.integers(4, 30))
def test_delaunay_euler_and_duality(seed, n):
    rng = np.random.default_rng(seed)
    p = well_separated(rng, n, 0.02)
    t = delaunay_triangulation(p)
    g = spherical_voronoi(p)
    edges = t.edges()
    if len(t.triangles) == 2 * n - 4:
        assert len(edges) == 3 * n - 6
    assert g.adjacent_pairs() == edges


@settings(max_examples=25, deadline=None)
@given(seed_st, st.integers(3, 10), st.floats(0.01, 0.6))
def test_weighted_boundary_residual(seed, n, spread):
    rng = np.random.default_rng(seed)
    p = well_separated(rng, n, 0.2)
    d = rng.uniform(0, spread, n)
    g = build_weighted_diagram(p, d)
    for e in g.edges:
        m, l = e.sites
        for pts in trace_boundary(m, l, p, d):
            dm = np.arctan2(np.linalg.norm(np.cross(pts, p[m]), axis=1), pts @ p[m]) + d[m]
            dl = np.arctan2(np.linalg.norm(np.cross(pts, p[l]), axis=1), pts @ p[l]) + d[l]
            assert np.abs(dm - dl).max() <= 1e-9


@FAST
@given(arrays(float, 3, elements=st.floats(-1e3, 1e3)))
def test_triple_point_labels_cancel(d):
    total = edge_label(d, 0, 1) + edge_label(d, 1, 2) + edge_label(d, 2, 0)
    assert abs(total) <= 4 * np.spacing(max(1.0, float(np.abs(d).max())))


@settings(max_examples=40, deadline=None)
@given(seed_st, st.integers(1, 12), st.integers(1, 4))
def test_oracle_equals_enumeration(seed, n_users, n_sites):
    rng = np.random.default_rng(seed)
    cost = rng.uniform(0, math.pi, (n_users, n_sites))
    caps = rng.integers(0, n_users + 1, n_sites).astype(float)
    caps[-1] = max(caps[-1], n_users - caps[:-1].sum())
    inst = TransportInstance(cost, np.ones(n_users), caps)
    res = solve_exact(inst)
    best, _ = brute_force(inst)
    assert res.total == best or math.isclose(res.total, best, rel_tol=1e-14)
    assert check_exchange_optimality(res.flow, inst) is None
    assert np.all(res.loads <= caps)


@settings(max_examples=30, deadline=None)
@given(seed_st, st.integers(2, 6), st.integers(5, 40))
def test_solver_stays_within_capacities(seed, n, N):
    rng = np.random.default_rng(seed)
    p = well_separated(rng, n, 0.05)
    caps = rng.integers(1, N, n).astype(float)
    caps[0] = max(caps[0], N - caps[1:].sum())
    sites = [Site(f"s{k}", unit_to_geo(p[k]), float(caps[k])) for k in range(n)]
    x = rng.normal(size=(N, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    res = solve(sites, DiscreteDemand(x, np.ones(N)))
    assert res.converged
    assert np.all(res.loads <= caps)
    assert np.all(res.weights >= 0) and (res.weights == 0).any()
