import math

import numpy as np
import pytest

from capvoronoi.demand import DiscreteDemand, RasterDemand, total_mass
from capvoronoi.errors import Infeasible, NotConverged
from capvoronoi.geometry import Sphere, latlon_to_unit
from capvoronoi.solver import (
    SolverConfig,
    check_feasibility,
    detect_active_set,
    dual_objective,
    solve,
)
from capvoronoi.transport import TransportInstance, solve_exact
from capvoronoi.voronoi import Site, site_positions
from capvoronoi.weighted import assign_atoms, weighted_argmin

from conftest import random_unit


def sites_at(points, caps):
    out = []
    for k, (x, c) in enumerate(zip(points, caps)):
        lat, lon = math.degrees(math.asin(x[2])), math.degrees(math.atan2(x[1], x[0]))
        out.append(Site.from_degrees(f"s{k}", lat, lon, c))
    return out


def kkt_violations(result, caps, mass, tol):
    slack = tol * mass
    bad = []
    for m, (d, load, cap) in enumerate(zip(result.weights, result.loads, caps)):
        if d > tol and abs(load - cap) > slack:
            bad.append(m)
        if load < cap - slack and d != 0:
            bad.append(m)
        if load > cap + slack:
            bad.append(m)
    return bad


def test_feasibility_examples():
    dem = DiscreteDemand(random_unit(np.random.default_rng(0), 10), np.ones(10))
    two = [Site.from_degrees("a", 0, 0, 5), Site.from_degrees("b", 0, 90, 5)]
    assert check_feasibility(two, dem).ok
    short = [Site.from_degrees("a", 0, 0, 3), Site.from_degrees("b", 0, 90, 3)]
    f = check_feasibility(short, dem)
    assert not f.ok and f.deficit == 4.0
    with pytest.raises(Infeasible) as exc:
        solve(short, dem)
    assert exc.value.deficit == 4.0
    assert check_feasibility([Site.from_degrees("a", 0, 0, 1), Site.from_degrees("b", 0, 9)], dem).ok


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(damping=0.0)
    with pytest.raises(ValueError):
        SolverConfig(method="newton")
    with pytest.raises(ValueError):
        SolverConfig(tol=-1.0)


def test_active_set_detection(rng):
    p = random_unit(rng, 10)
    free = sites_at(p, [math.inf] * 10)
    near0 = p[0] + 0.02 * rng.normal(size=(200, 3))
    near0 /= np.linalg.norm(near0, axis=1, keepdims=True)
    dem = DiscreteDemand(np.vstack([near0, random_unit(rng, 50)]), np.ones(250))
    assert detect_active_set(free, dem, np.zeros(10)) == ()
    caps = [100.0] + [1000.0] * 9
    assert detect_active_set(sites_at(p, caps), dem, np.zeros(10)) == (0,)
    res = solve(sites_at(p, caps), dem)
    assert detect_active_set(sites_at(p, caps), dem, res.weights) in ((), (0,))
    assert res.loads[0] == 100.0


def test_unconstrained_is_classical(rng):
    p = random_unit(rng, 6)
    dem = DiscreteDemand(random_unit(rng, 100), np.ones(100))
    res = solve(sites_at(p, [math.inf] * 6), dem)
    assert res.method == "classical" and not res.weights.any()
    assert res.total_distance == pytest.approx(dual_objective(sites_at(p, [math.inf] * 6), dem, np.zeros(6)))


@pytest.mark.parametrize("seed", range(15))
def test_discrete_matches_oracle_and_kkt(seed):
    rng = np.random.default_rng(seed)
    n, N = 5, 30
    p = random_unit(rng, n)
    caps = rng.integers(2, 12, n).astype(float)
    if caps.sum() < N:
        caps[-1] += N - caps.sum()
    sites = sites_at(p, caps)
    dem = DiscreteDemand(random_unit(rng, N), np.ones(N))
    res = solve(sites, dem)
    oracle = solve_exact(TransportInstance.from_demand(dem, sites, Sphere()))
    assert res.total_distance == pytest.approx(oracle.total, rel=1e-9)
    assert res.converged
    assert kkt_violations(res, caps, N, 1e-9) == []


@pytest.mark.parametrize("seed", range(10))
def test_ascent_path_on_coarse_atoms_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    n, N = 4, 25
    p = random_unit(rng, n)
    caps = np.array([4.0, 5.0, 6.0, 10.0])
    sites = sites_at(p, caps)
    dem = DiscreteDemand(random_unit(rng, N), np.ones(N))
    res = solve(sites, dem, cfg=SolverConfig(method="ascent", tol=1e-12))
    oracle = solve_exact(TransportInstance.from_demand(dem, sites, Sphere()))
    assert res.converged
    assert res.total_distance == pytest.approx(oracle.total, rel=1e-9)
    assert np.all(res.loads <= caps + 1e-9 * N)


def test_ascent_on_points_agrees_with_flow(rng):
    p = random_unit(rng, 4)
    x = random_unit(rng, 400)
    mass = rng.uniform(0.5, 1.5, 400)
    dem = DiscreteDemand(x, mass)
    caps = np.array([60.0, 90.0, 120.0, math.inf])
    sites = sites_at(p, caps)
    flow = solve(sites, dem, cfg=SolverConfig(method="flow"))
    asc = solve(sites, dem, cfg=SolverConfig(method="ascent", tol=1e-9))
    assert asc.converged
    assert asc.total_distance == pytest.approx(flow.total_distance, rel=1e-9)
    assert np.all(asc.loads <= caps + 1e-6)


def test_dual_monotone_and_improves(rng):
    p = random_unit(rng, 6)
    caps = [math.pi / 2, math.pi / 3, math.inf, math.inf, math.pi, math.inf]
    sites = sites_at(p, caps)
    dem = RasterDemand.uniform(90, 180)
    res = solve(sites, dem)
    assert res.converged
    h = res.history
    assert all(b >= a - 1e-9 * abs(a) for a, b in zip(h, h[1:]))
    assert dual_objective(sites, dem, res.weights) >= dual_objective(sites, dem, np.zeros(6)) - 1e-12
    assert kkt_violations(res, caps, total_mass(dem), 1e-6) == []
    assert res.total_distance == pytest.approx(dual_objective(sites, dem, res.weights), rel=1e-6)


def test_dual_at_zero_is_voronoi_distance(rng):
    p = random_unit(rng, 5)
    sites = sites_at(p, [math.inf] * 5)
    dem = DiscreteDemand(random_unit(rng, 80), rng.uniform(1, 2, 80))
    a = assign_atoms(dem.positions, dem.masses, sites, None)
    assert dual_objective(sites, dem, np.zeros(5)) == pytest.approx(a.total, rel=1e-15)


def test_dual_shift_invariance_when_tight(rng):
    p = random_unit(rng, 3)
    dem = DiscreteDemand(random_unit(rng, 30), np.ones(30))
    sites = sites_at(p, [10.0, 10.0, 10.0])
    d = np.array([0.1, 0.4, 0.2])
    g0 = dual_objective(sites, dem, d)
    assert dual_objective(sites, dem, d + 0.3) == pytest.approx(g0, rel=1e-12)


def test_assignment_shift_invariant(rng):
    p = random_unit(rng, 7)
    x = random_unit(rng, 200)
    d = rng.uniform(0, 0.5, 7)
    base = weighted_argmin(x, p, d)
    for c in (-1.0, 1.0, 10.0):
        assert np.array_equal(weighted_argmin(x, p, d + c), base)


def test_not_converged_reporting():
    p = latlon_to_unit(np.zeros(3), np.radians([0, 100, 220]))
    sites = sites_at(p, [1.0, 1.5, math.inf])
    dem = RasterDemand.uniform(60, 120)
    cfg = SolverConfig(max_inner=1, max_outer=1, exact_fallback=False)
    res = solve(sites, dem, cfg=cfg)
    assert not res.converged
    with pytest.raises(NotConverged) as exc:
        solve(sites, dem, cfg=cfg, strict=True)
    assert exc.value.result.iterations == 1
    rescued = solve(sites, dem, cfg=SolverConfig(max_inner=1, max_outer=1))
    assert rescued.converged and rescued.method == "ascent+lp"
    full = solve(sites, dem)
    assert full.converged and full.method == "ascent"
    assert rescued.total_distance == pytest.approx(full.total_distance, rel=1e-6)


def test_threads_do_not_change_result(rng):
    p = random_unit(rng, 5)
    sites = sites_at(p, [2.0, math.inf, 3.0, math.inf, math.inf])
    dem = RasterDemand.uniform(120, 240)
    a = solve(sites, dem)
    b = solve(sites, dem, cfg=SolverConfig(threads=4))
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.loads, b.loads)
    assert a.total_distance == b.total_distance


def test_all_sites_saturated(rng):
    p = random_unit(rng, 3)
    dem = RasterDemand.uniform(60, 120)
    tot = total_mass(dem)
    caps = [tot * 0.2, tot * 0.3, tot * 0.5]
    res = solve(sites_at(p, caps), dem)
    assert res.converged
    assert res.weights.min() == 0.0
    assert np.allclose(res.loads, caps, rtol=1e-6)
