"""Exact discrete capacitated assignment and optimality certificates.

The transportation problem

    min sum_km c_km x_km   s.t.  sum_m x_km = a_k,  sum_k x_km <= C_m,  x >= 0

is solved by successive shortest paths.  Users are routed one at a time; a
path starts at the user, may re-route already assigned users between sites
(site-to-site edge weight ``c_ul - c_um``), and ends at a site with spare
capacity.  The site duals ``d`` (price of capacity) come out as shortest
distances to the set of sites with slack, so ``u_k = min_m (c_km + d_m)`` is
attained at every assigned pair.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleInstance

BRUTE_FORCE_MAX_USERS = 12
BRUTE_FORCE_MAX_SITES = 4


@dataclass(frozen=True)
class TransportInstance:
    cost: np.ndarray
    masses: np.ndarray
    capacities: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        cost = np.atleast_2d(np.asarray(self.cost, dtype=float))
        masses = np.asarray(self.masses, dtype=float).reshape(-1)
        caps = np.asarray(self.capacities, dtype=float).reshape(-1)
        if cost.shape != (len(masses), len(caps)):
            raise ValueError(f"cost shape {cost.shape} does not match {len(masses)} users x {len(caps)} sites")
        if np.any(cost < 0) or np.any(masses < 0) or np.any(caps < 0):
            raise ValueError("costs, masses and capacities must be nonnegative")
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "capacities", caps)

    @classmethod
    def from_demand(cls, demand, sites, s) -> "TransportInstance":
        from .voronoi import site_capacities, site_positions
        from .weighted import cost_matrix

        return cls(
            cost_matrix(demand.positions, site_positions(sites), s),
            demand.masses,
            site_capacities(sites),
            s.radius,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.cost.shape

    def total_cost(self, flow) -> float:
        flow = as_flow(flow, self)
        return math.fsum((flow * self.cost)[flow > 0])


@dataclass(frozen=True)
class OracleResult:
    flow: np.ndarray
    labels: np.ndarray
    total: float
    site_potentials: np.ndarray
    user_potentials: np.ndarray

    @property
    def loads(self) -> np.ndarray:
        return np.array([math.fsum(col) for col in self.flow.T])


@dataclass(frozen=True)
class Violation:
    """Swapping ``users`` = (u in cell m, w in cell l) saves ``gain``."""

    pair: tuple[int, int]
    users: tuple[int, int]
    gain: float


def as_flow(assignment, inst: TransportInstance) -> np.ndarray:
    """Accept per-user labels or an (N, n) flow matrix."""
    arr = np.asarray(assignment)
    if arr.ndim == 2:
        return arr.astype(float)
    flow = np.zeros(inst.shape)
    flow[np.arange(len(arr)), arr.astype(int)] = inst.masses
    return flow


def _site_graph(cost, flow, n):
    """W[i, j] = cheapest re-route of one assigned unit from site i to site j."""
    w = np.full((n, n), np.inf)
    via = np.full((n, n), -1, dtype=int)
    for i in range(n):
        users = np.nonzero(flow[:, i] > 0)[0]
        if users.size == 0:
            continue
        delta = cost[users] - cost[users, i][:, None]
        k = np.argmin(delta, axis=0)
        w[i] = delta[k, np.arange(n)]
        via[i] = users[k]
        w[i, i] = np.inf
        via[i, i] = -1
    return w, via


def _bellman_ford(start, w, tol):
    n = len(start)
    dist = start.copy()
    pred = np.full(n, -1, dtype=int)
    for _ in range(n + 1):
        cand = dist[:, None] + w
        src = np.argmin(cand, axis=0)
        best = cand[src, np.arange(n)]
        better = best < dist - tol
        if not better.any():
            break
        dist = np.where(better, best, dist)
        pred = np.where(better, src, pred)
    return dist, pred


def _potentials(w, slack, tol):
    """Smallest nonnegative site duals consistent with the re-route graph."""
    n = len(slack)
    if not slack.any():
        d, _ = _bellman_ford(np.zeros(n), w.T, tol)
        return d - d.min()
    d, _ = _bellman_ford(np.where(slack, 0.0, np.inf), w.T, tol)
    unreached = ~np.isfinite(d)
    if unreached.any():
        sub = w[np.ix_(unreached, unreached)]
        du, _ = _bellman_ford(np.zeros(int(unreached.sum())), sub.T, tol)
        into = w[np.ix_(~unreached, unreached)]
        need = d[~unreached][:, None] - into - du[None, :]
        shift = max(0.0, -du.min(), float(np.max(need[np.isfinite(need)], initial=0.0)))
        d[unreached] = du + shift
    return d


def solve_exact(inst: TransportInstance, *, quantum: float | None = None) -> OracleResult:
    """Globally optimal assignment with dual potentials.

    Masses and capacities may be scaled to integer multiples of ``quantum``
    first; with integer data every intermediate flow is integral.
    """
    cost = inst.cost
    a = inst.masses.copy()
    cap = inst.capacities.copy()
    if quantum is not None:
        a = np.rint(a / quantum)
        cap = np.where(np.isfinite(cap), np.floor(cap / quantum + 1e-9), np.inf)
    n_users, n = cost.shape
    if n == 0:
        raise InfeasibleInstance("no sites")
    if math.fsum(a) > math.fsum(cap):
        raise InfeasibleInstance(f"demand {math.fsum(a)!r} exceeds capacity {math.fsum(cap)!r}")
    tol = 1e-12 * max(1.0, float(cost.max(initial=0.0)))

    flow = np.zeros((n_users, n))
    load = np.zeros(n)
    for k in range(n_users):
        rem = a[k]
        while rem > 0:
            w, via = _site_graph(cost, flow, n)
            dist, pred = _bellman_ford(cost[k].copy(), w, tol)
            room = cap - load
            open_ = room > 0
            if not open_.any():
                raise InfeasibleInstance("ran out of capacity while routing")
            z = int(np.argmin(np.where(open_, dist, np.inf)))
            hops = []
            node, seen = z, set()
            while pred[node] >= 0:
                if node in seen:
                    raise RuntimeError("negative cycle in residual graph")
                seen.add(node)
                i = int(pred[node])
                hops.append((int(via[i, node]), i, node))
                node = i
            first = node
            push = min(rem, room[z])
            for u, i, _ in hops:
                push = min(push, flow[u, i])
            flow[k, first] += push
            for u, i, j in hops:
                flow[u, i] -= push
                flow[u, j] += push
            load[z] += push
            rem -= push
            flow[np.abs(flow) < 1e-15] = 0.0

    if quantum is not None:
        flow = flow * quantum
        cap_eff = inst.capacities
    else:
        cap_eff = cap
    w, _ = _site_graph(cost, flow, n)
    loads = flow.sum(axis=0)
    slack = loads < cap_eff - 1e-9 * max(1.0, float(a.sum()))
    d = _potentials(w, slack, tol)
    u = np.min(cost + d, axis=1)
    labels = np.argmax(flow, axis=1)
    total = math.fsum((flow * cost)[flow > 0])
    return OracleResult(flow, labels, total, d, u)


def brute_force(inst: TransportInstance) -> tuple[float, np.ndarray]:
    """Exhaustive search over all unsplit assignments (users <= 12, sites <= 4).

    Returns ``(optimal_total, labels)``; the total is recomputed with fsum.
    """
    cost, a, cap = inst.cost, inst.masses, inst.capacities
    n_users, n = cost.shape
    if n_users > BRUTE_FORCE_MAX_USERS or n > BRUTE_FORCE_MAX_SITES:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX_USERS} users x {BRUTE_FORCE_MAX_SITES} sites")
    k = min(n_users, 8)
    head = n_users - k
    suffix = np.stack(np.unravel_index(np.arange(n**k), (n,) * k), axis=1).reshape(-1, k)
    users = np.arange(head, n_users)
    s_cost = (a[users] * cost[users[None, :], suffix]).sum(axis=1) if k else np.zeros(1)
    s_load = np.zeros((len(suffix), n))
    rows = np.arange(len(suffix))
    for col, user in enumerate(users):
        s_load[rows, suffix[:, col]] += a[user]
    # only the cheapest suffix per load vector can be part of an optimum
    order = np.argsort(s_cost, kind="stable")
    _, first = np.unique(s_load[order], axis=0, return_index=True)
    keep = np.sort(order[first])
    suffix, s_cost, s_load = suffix[keep], s_cost[keep], s_load[keep]
    best, best_labels = math.inf, None
    for prefix in itertools.product(range(n), repeat=head):
        p_cost = sum(a[i] * cost[i, m] for i, m in enumerate(prefix))
        p_load = np.zeros(n)
        for i, m in enumerate(prefix):
            p_load[m] += a[i]
        ok = np.all(s_load + p_load <= cap + 1e-12, axis=1)
        if not ok.any():
            continue
        tot = np.where(ok, s_cost + p_cost, np.inf)
        j = int(np.argmin(tot))
        if tot[j] < best:
            best = float(tot[j])
            best_labels = np.array(list(prefix) + list(suffix[j]), dtype=int)
    if best_labels is None:
        raise InfeasibleInstance("no feasible assignment")
    exact = math.fsum(a[i] * cost[i, m] for i, m in enumerate(best_labels))
    return exact, best_labels


def check_exchange_optimality(assignment, inst: TransportInstance, *, slack: float | None = None):
    """Pairwise swap test; returns None when no improving swap exists.

    For every ordered pair (m, l) the smallest ``c_l - c_m`` over users served
    by m must be at least the largest ``c_l - c_m`` over users served by l.
    Otherwise the worst offending pair is returned with the saving obtained by
    swapping the two extreme users (times the mass that can be swapped).
    """
    flow = as_flow(assignment, inst)
    cost = inst.cost
    tol = 1e-9 * inst.scale if slack is None else slack
    n = cost.shape[1]
    worst = None
    for m, l in itertools.permutations(range(n), 2):
        in_m = np.nonzero(flow[:, m] > 0)[0]
        in_l = np.nonzero(flow[:, l] > 0)[0]
        if in_m.size == 0 or in_l.size == 0:
            continue
        diff_m = cost[in_m, l] - cost[in_m, m]
        diff_l = cost[in_l, l] - cost[in_l, m]
        i, j = int(np.argmin(diff_m)), int(np.argmax(diff_l))
        gap = diff_l[j] - diff_m[i]
        if gap > tol:
            u, v = int(in_m[i]), int(in_l[j])
            gain = float(gap * min(flow[u, m], flow[v, l]))
            if worst is None or gain > worst.gain:
                worst = Violation((m, l), (u, v), gain)
    return worst


def potential_gap(assignment, duals, inst: TransportInstance) -> float:
    """Largest excess ``c_km + d_m - min_l (c_kl + d_l)`` over assigned pairs."""
    flow = as_flow(assignment, inst)
    d = np.asarray(duals, dtype=float)
    reduced = inst.cost + d
    best = reduced.min(axis=1, keepdims=True)
    excess = np.where(flow > 0, reduced - best, -np.inf)
    return float(max(0.0, excess.max(initial=0.0)))


def dual_value(result: OracleResult, inst: TransportInstance) -> float:
    """``sum_k a_k u_k - sum_m C_m d_m`` over bounded sites."""
    caps = inst.capacities
    bounded = np.isfinite(caps)
    return math.fsum(inst.masses * result.user_potentials) - math.fsum(
        caps[bounded] * result.site_potentials[bounded]
    )


def potential_intervals(result: OracleResult, inst: TransportInstance) -> np.ndarray:
    """Range each d_m can take, others fixed, without changing optimality.

    Rows are ``(low, high)``; reflects the non-uniqueness of weights for
    discrete demand.
    """
    n = inst.shape[1]
    w, _ = _site_graph(inst.cost, result.flow, n)
    d = result.site_potentials
    loads = result.flow.sum(axis=0)
    full = loads >= inst.capacities - 1e-9 * max(1.0, float(inst.masses.sum()))
    out = np.zeros((n, 2))
    for m in range(n):
        incoming = d - w[:, m]
        low = max(0.0, float(np.max(incoming[np.isfinite(incoming)], initial=0.0)))
        outgoing = w[m] + d
        high = float(np.min(outgoing[np.isfinite(outgoing)], initial=np.inf))
        out[m] = (low, high if full[m] else 0.0)
    return out
