import itertools
import math

import numpy as np
import pytest
from scipy.optimize import linprog

from capvoronoi.errors import InfeasibleInstance
from capvoronoi.transport import (
    TransportInstance,
    brute_force,
    check_exchange_optimality,
    dual_value,
    potential_gap,
    potential_intervals,
    solve_exact,
)

from conftest import random_unit


def random_instance(rng, n_users, n_sites, scale=1.0):
    x, p = random_unit(rng, n_users), random_unit(rng, n_sites)
    cost = scale * np.arctan2(np.linalg.norm(np.cross(x[:, None], p[None]), axis=2), x @ p.T)
    caps = rng.integers(1, n_users + 1, n_sites).astype(float)
    while caps.sum() < n_users:
        caps[rng.integers(n_sites)] += 1
    if rng.random() < 0.3:
        caps[rng.integers(n_sites)] = np.inf
    return TransportInstance(cost, np.ones(n_users), caps, scale)


def lp_optimum(inst):
    """Transportation LP solved by HiGHS, as an independent reference."""
    n_users, n = inst.shape
    a_eq = np.kron(np.eye(n_users), np.ones(n))
    bounded = [m for m in range(n) if np.isfinite(inst.capacities[m])]
    a_ub = np.array([np.kron(np.ones(n_users), np.eye(n)[m]) for m in bounded]) if bounded else None
    b_ub = inst.capacities[bounded] if bounded else None
    res = linprog(inst.cost.ravel(), A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=inst.masses, method="highs")
    assert res.status == 0
    return res.fun


def test_two_by_two_example():
    inst = TransportInstance([[0.0, 1.0], [0.0, 1.0]], [1, 1], [1, 1])
    res = solve_exact(inst)
    assert res.total == 1.0
    assert sorted(res.labels) == [0, 1]
    d = res.site_potentials - res.site_potentials.min()
    assert list(d) == [1.0, 0.0]
    assert potential_gap(res.flow, res.site_potentials, inst) == 0.0


def test_unconstrained_instance_is_nearest(rng):
    inst = random_instance(rng, 20, 4)
    inst = TransportInstance(inst.cost, inst.masses, np.full(4, 20.0))
    res = solve_exact(inst)
    assert np.array_equal(res.labels, np.argmin(inst.cost, axis=1))
    assert np.all(res.site_potentials == 0)
    assert potential_gap(res.labels, np.zeros(4), inst) == 0.0


@pytest.mark.parametrize("seed", range(40))
def test_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 12, 4)
    res = solve_exact(inst)
    best, labels = brute_force(inst)
    assert res.total == pytest.approx(best, rel=1e-12, abs=1e-12)
    assert TransportInstance.total_cost(inst, labels) == pytest.approx(best, rel=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_matches_lp_and_strong_duality(seed):
    rng = np.random.default_rng(100 + seed)
    inst = random_instance(rng, 25, 5, scale=6371.0)
    res = solve_exact(inst)
    assert res.total == pytest.approx(lp_optimum(inst), rel=1e-9)
    assert dual_value(res, inst) == pytest.approx(res.total, rel=1e-9)
    assert np.all(res.loads <= inst.capacities + 1e-9)
    assert potential_gap(res.flow, res.site_potentials, inst) <= 1e-9 * 6371.0
    assert check_exchange_optimality(res.flow, inst) is None
    assert res.site_potentials.min() == 0.0


def test_fractional_masses_with_quantum(rng):
    inst = random_instance(rng, 10, 3)
    inst = TransportInstance(inst.cost, np.full(10, 0.5), np.array([1.0, 1.5, 4.0]))
    res = solve_exact(inst, quantum=0.5)
    assert res.total == pytest.approx(lp_optimum(inst), rel=1e-9)


def test_infeasible_instance():
    with pytest.raises(InfeasibleInstance):
        solve_exact(TransportInstance(np.zeros((3, 2)), np.ones(3), [1, 1]))


def test_swapped_assignment_is_caught(rng):
    found = 0
    for _ in range(50):
        inst = random_instance(rng, 10, 3)
        res = solve_exact(inst)
        labels = res.labels.copy()
        pairs = [(u, v) for u, v in itertools.combinations(range(10), 2) if labels[u] != labels[v]]
        for u, v in pairs:
            m, l = labels[u], labels[v]
            a = inst.cost[u, l] + inst.cost[v, m]
            b = inst.cost[u, m] + inst.cost[v, l]
            if a - b > 1e-6:
                swapped = labels.copy()
                swapped[u], swapped[v] = l, m
                viol = check_exchange_optimality(swapped, inst)
                assert viol is not None and viol.gain >= a - b - 1e-12
                found += 1
                break
    assert found > 10


def test_single_site_is_vacuously_optimal():
    inst = TransportInstance(np.ones((4, 1)), np.ones(4), [np.inf])
    assert check_exchange_optimality(np.zeros(4, dtype=int), inst) is None


def test_perturbed_duals_show_gap(rng):
    for _ in range(20):
        inst = random_instance(rng, 20, 4)
        res = solve_exact(inst)
        active = np.nonzero(res.site_potentials > 0)[0]
        if active.size == 0:
            continue
        d = res.site_potentials.copy()
        d[active[0]] += 0.1
        assert potential_gap(res.flow, d, inst) > 0
        return
    pytest.fail("no instance with an active site")


def test_potential_intervals_contain_duals(rng):
    inst = random_instance(rng, 15, 4)
    res = solve_exact(inst)
    iv = potential_intervals(res, inst)
    assert np.all(iv[:, 0] <= res.site_potentials + 1e-12)
    assert np.all(res.site_potentials <= iv[:, 1] + 1e-12)


def test_brute_force_limits(rng):
    with pytest.raises(ValueError):
        brute_force(random_instance(rng, 13, 3))
