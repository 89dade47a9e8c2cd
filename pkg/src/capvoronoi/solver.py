"""Weights of the capacity-constrained weighted diagram.

Procedure: start from the classical diagram (all weights zero).  If no site
is overloaded that is the answer.  Otherwise

* discrete demand is solved exactly as a transportation problem and the
  weights are read off as the site potentials;
* raster demand is solved by coordinate ascent on the concave dual

      G(d) = sum_a mu_a min_m (c_am + d_m) - sum_m C_m d_m,   d >= 0,

  over a growing active set.  Each coordinate step maximizes G exactly in
  d_m: the load of site m is a nonincreasing step function of d_m whose
  breakpoints are known, so the step is a bisection over sorted breakpoints.
  Atoms left exactly on a boundary at the end are divided between the tied
  sites by a small LP so loads meet capacities.  Coordinate ascent can stall
  at a kink of the piecewise-linear dual when atoms are coarse; if the final
  point fails the optimality test, the full transportation LP is solved
  instead and weights are recovered as shortest-path potentials.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .demand import DiscreteDemand, total_mass
from .errors import Infeasible, NotConverged
from .geometry import EPS, Sphere
from .transport import TransportInstance, _potentials, _site_graph, solve_exact
from .voronoi import site_capacities, site_positions
from .weighted import Assignment, assign_by_labels, as_weights, cost_matrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    tol: float | None = None  # relative to total mass; None -> 1e-6 raster, 0 discrete
    max_outer: int = 20
    max_inner: int = 500
    damping: float = 1.0
    eps: float = EPS
    method: str = "auto"  # auto | flow | ascent
    threads: int = 1
    exact_fallback: bool = True  # solve the transportation LP if ascent stalls

    def __post_init__(self):
        if self.tol is not None and not self.tol >= 0:
            raise ValueError("tol must be >= 0")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be >= 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.method not in ("auto", "flow", "ascent"):
            raise ValueError(f"unknown method {self.method!r}")

    def tolerance(self, demand) -> float:
        if self.tol is not None:
            return self.tol
        return 0.0 if isinstance(demand, DiscreteDemand) else 1e-6


@dataclass(frozen=True)
class Feasibility:
    ok: bool
    capacity: float
    demand: float

    @property
    def deficit(self) -> float:
        return max(0.0, self.demand - self.capacity)


@dataclass
class SolveResult:
    weights: np.ndarray
    assignment: Assignment
    active_set: tuple[int, ...]
    iterations: int
    converged: bool
    residuals: dict[int, float]
    method: str
    history: list[float] = field(default_factory=list)

    @property
    def loads(self) -> np.ndarray:
        return self.assignment.loads

    @property
    def total_distance(self) -> float:
        return self.assignment.total


def check_feasibility(sites, demand) -> Feasibility:
    caps = site_capacities(sites)
    cap = math.inf if np.isinf(caps).any() else math.fsum(caps)
    mass = total_mass(demand)
    return Feasibility(cap >= mass, cap, mass)


def detect_active_set(sites, demand, d, cfg: SolverConfig = SolverConfig(), s: Sphere = Sphere()):
    """Sites whose weighted cell holds more than capacity plus tolerance."""
    caps = site_capacities(sites)
    cost = cost_matrix(demand.positions, site_positions(sites), s, cfg.threads)
    w = as_weights(d, len(caps))
    a = assign_by_labels(np.argmin(cost + w, axis=1), demand.masses, cost)
    slack = cfg.tolerance(demand) * total_mass(demand)
    return tuple(int(m) for m in np.nonzero(a.loads > caps + slack)[0])


def _dual(cost, masses, caps, d) -> float:
    bounded = np.isfinite(caps)
    if np.any(d[~bounded] != 0):
        return -math.inf
    return math.fsum(masses * np.min(cost + d, axis=1)) - math.fsum(caps[bounded] * d[bounded])


def dual_objective(sites, demand, d, s: Sphere = Sphere()) -> float:
    caps = site_capacities(sites)
    cost = cost_matrix(demand.positions, site_positions(sites), s)
    return _dual(cost, demand.masses, caps, as_weights(d, len(caps)))


def _line_search(cost, masses, cap, d, m) -> float:
    """Smallest d_m >= 0 whose strictly-preferring atoms fit in ``cap``."""
    others = np.delete(cost + d, m, axis=1)
    if others.shape[1] == 0:
        return 0.0
    t = others.min(axis=1) - cost[:, m]
    order = np.argsort(-t, kind="stable")
    cum = np.cumsum(masses[order])
    j = int(np.searchsorted(cum, cap, side="right"))
    if j >= len(order):
        return 0.0
    return max(0.0, float(t[order[j]]))


def _settle(cost, masses, caps, d, tie_tol) -> Assignment | None:
    """Final assignment at weights d, dividing tied atoms so capacities hold."""
    reduced = cost + d
    labels = np.argmin(reduced, axis=1)
    best = reduced[np.arange(len(labels)), labels]
    near = reduced - best[:, None] <= tie_tol
    tied = np.nonzero(near.sum(axis=1) > 1)[0]
    base = assign_by_labels(labels, masses, cost)
    if tied.size == 0:
        return base
    n = cost.shape[1]
    fixed = np.ones(len(labels), dtype=bool)
    fixed[tied] = False
    fixed_load = np.array([math.fsum(masses[fixed & (labels == k)]) for k in range(n)])
    pairs = [(a, k) for a in tied for k in np.nonzero(near[a])[0]]
    nv = len(pairs)
    c = np.array([cost[a, k] for a, k in pairs])
    a_eq, b_eq = [], []
    col = {p: i for i, p in enumerate(pairs)}
    for a in tied:
        row = np.zeros(nv)
        for k in np.nonzero(near[a])[0]:
            row[col[(a, k)]] = 1.0
        a_eq.append(row)
        b_eq.append(masses[a])
    cap_rows = []
    for k in range(n):
        if not np.isfinite(caps[k]):
            continue
        row = np.zeros(nv)
        for i, (a, kk) in enumerate(pairs):
            if kk == k:
                row[i] = 1.0
        if not row.any():
            continue
        cap_rows.append((k, row, caps[k] - fixed_load[k]))
    for strict in (True, False):
        a_ub, b_ub, ae, be = [], [], list(a_eq), list(b_eq)
        for k, row, rhs in cap_rows:
            if strict and d[k] > 0:
                ae.append(row)
                be.append(rhs)
            else:
                a_ub.append(row)
                b_ub.append(rhs)
        res = linprog(
            c,
            A_ub=np.array(a_ub) if a_ub else None,
            b_ub=np.array(b_ub) if b_ub else None,
            A_eq=np.array(ae),
            b_eq=np.array(be),
            bounds=(0, None),
            method="highs",
        )
        if res.status == 0:
            break
    else:
        return None
    x = np.clip(res.x, 0.0, None)
    out_labels = labels.copy()
    splits = {}
    per_site = [list(masses[fixed & (labels == k)]) for k in range(n)]
    dist_terms = list(masses[fixed] * cost[fixed, labels[fixed]])
    for a in tied:
        shares = [(int(k), float(x[col[(a, k)]])) for k in np.nonzero(near[a])[0]]
        shares = [(k, v) for k, v in shares if v > 1e-15 * masses[a]]
        scale = masses[a] / math.fsum(v for _, v in shares)
        shares = [(k, v * scale) for k, v in shares]
        out_labels[a] = max(shares, key=lambda t: (t[1], -t[0]))[0]
        if len(shares) > 1:
            splits[int(a)] = tuple(shares)
        for k, v in shares:
            per_site[k].append(v)
            dist_terms.append(v * cost[a, k])
    loads = np.array([math.fsum(v) for v in per_site])
    return Assignment(out_labels, loads, math.fsum(dist_terms), splits)


def _kkt_ok(loads, caps, d, slack) -> bool:
    over = loads > caps + slack
    loose = (d > 0) & (np.abs(loads - caps) > slack)
    return not over.any() and not loose.any()


def _ascent(cost, masses, caps, mass, tol, cfg, first_active):
    n = cost.shape[1]
    d = np.zeros(n)
    slack = tol * mass
    xtol = 1e-14 * max(1.0, float(cost.max(initial=0.0)))
    tie_tol = 1e-9 * max(1.0, float(cost.max(initial=0.0)))
    active = sorted(first_active)
    history = [_dual(cost, masses, caps, d)]
    sweeps = 0
    assignment = None
    settled = False
    for _ in range(cfg.max_outer):
        settled = False
        for _ in range(cfg.max_inner):
            change = 0.0
            for m in active:
                target = _line_search(cost, masses, caps[m], d, m)
                new = d[m] + cfg.damping * (target - d[m])
                change = max(change, abs(new - d[m]))
                d[m] = new
            sweeps += 1
            history.append(_dual(cost, masses, caps, d))
            if change <= xtol:
                settled = True
                break
        assignment = _settle(cost, masses, caps, d, tie_tol)
        if assignment is None:
            assignment = assign_by_labels(np.argmin(cost + d, axis=1), masses, cost)
        grown = [m for m in np.nonzero(assignment.loads > caps + slack)[0] if m not in active]
        if not grown:
            break
        active = sorted(set(active) | {int(m) for m in grown})
    converged = settled and _kkt_ok(assignment.loads, caps, d, slack)
    return d, assignment, tuple(active), sweeps, converged, history


def _lp_transport(cost, masses, caps):
    """Exact assignment by the transportation LP; weights from the re-route graph."""
    n_atoms, n = cost.shape
    cols = np.arange(n_atoms * n)
    a_eq = sparse.csr_matrix((np.ones(n_atoms * n), (cols // n, cols)), shape=(n_atoms, n_atoms * n))
    bounded = np.nonzero(np.isfinite(caps))[0]
    rows = np.concatenate([np.full(n_atoms, i) for i in range(len(bounded))]) if len(bounded) else np.zeros(0, int)
    idx = np.concatenate([np.arange(n_atoms) * n + m for m in bounded]) if len(bounded) else np.zeros(0, int)
    a_ub = sparse.csr_matrix((np.ones(len(idx)), (rows, idx)), shape=(len(bounded), n_atoms * n))
    res = linprog(
        cost.ravel(),
        A_ub=a_ub if len(bounded) else None,
        b_ub=caps[bounded] if len(bounded) else None,
        A_eq=a_eq,
        b_eq=masses,
        bounds=(0, None),
        method="highs",
    )
    if res.status != 0:
        return None
    x = res.x.reshape(n_atoms, n)
    x[x < 1e-12 * masses[:, None]] = 0.0
    x *= (masses / x.sum(axis=1))[:, None]
    labels = np.argmax(x, axis=1)
    splits = {}
    for a in np.nonzero((x > 0).sum(axis=1) > 1)[0]:
        splits[int(a)] = tuple((int(k), float(x[a, k])) for k in np.nonzero(x[a] > 0)[0])
    loads = np.array([math.fsum(x[:, k]) for k in range(n)])
    total = math.fsum((x * cost)[x > 0])
    tol = 1e-12 * max(1.0, float(cost.max(initial=0.0)))
    w, _ = _site_graph(cost, x, n)
    slack = loads < caps - 1e-9 * math.fsum(masses)
    d = _potentials(w, slack, tol)
    return d, Assignment(labels, loads, total, splits)


def _from_flow(inst: TransportInstance, masses) -> tuple[np.ndarray, Assignment]:
    res = solve_exact(inst)
    flow = res.flow
    n = flow.shape[1]
    splits = {}
    for a in np.nonzero((flow > 0).sum(axis=1) > 1)[0]:
        splits[int(a)] = tuple((int(k), float(flow[a, k])) for k in np.nonzero(flow[a] > 0)[0])
    loads = np.array([math.fsum(flow[:, k]) for k in range(n)])
    return res.site_potentials, Assignment(res.labels, loads, res.total, splits)


def solve(sites, demand, s: Sphere = Sphere(), cfg: SolverConfig = SolverConfig(), *, strict: bool = False) -> SolveResult:
    """Weights d whose weighted diagram meets every capacity at minimum total distance.

    Raises Infeasible when capacity is short.  If iteration caps are hit the
    result comes back with ``converged=False`` (or NotConverged is raised
    when ``strict``).
    """
    feas = check_feasibility(sites, demand)
    if not feas.ok:
        raise Infeasible(feas.deficit)
    caps = site_capacities(sites)
    n = len(caps)
    if n == 0:
        raise Infeasible(feas.demand)
    cost = cost_matrix(demand.positions, site_positions(sites), s, cfg.threads)
    masses = demand.masses
    mass = feas.demand
    tol = cfg.tolerance(demand)
    slack = tol * mass

    classical = assign_by_labels(np.argmin(cost, axis=1), masses, cost)
    violators = [int(m) for m in np.nonzero(classical.loads > caps + slack)[0]]
    if not violators:
        return SolveResult(np.zeros(n), classical, (), 0, True, {}, "classical", [])

    use_flow = cfg.method == "flow" or (cfg.method == "auto" and isinstance(demand, DiscreteDemand))
    if use_flow:
        inst = TransportInstance(cost, masses, caps, s.radius)
        d, assignment = _from_flow(inst, masses)
        bound = np.isfinite(caps)
        active = tuple(int(m) for m in np.nonzero((d > 0) | (bound & (assignment.loads >= caps - slack)))[0])
        residuals = {m: abs(float(assignment.loads[m] - caps[m])) for m in active}
        result = SolveResult(d, assignment, active, 1, True, residuals, "flow", [])
    else:
        d, assignment, active, sweeps, converged, history = _ascent(cost, masses, caps, mass, tol, cfg, violators)
        d = np.where(np.isin(np.arange(n), active), d, 0.0)
        method = "ascent"
        if not converged and cfg.exact_fallback:
            exact = _lp_transport(cost, masses, caps)
            lp_slack = max(slack, 1e-9 * mass)
            if exact is not None and _kkt_ok(exact[1].loads, caps, exact[0], lp_slack):
                d, assignment = exact
                bound = np.isfinite(caps)
                active = tuple(int(m) for m in np.nonzero((d > 0) | (bound & (assignment.loads >= caps - lp_slack)))[0])
                converged, method = True, "ascent+lp"
        if d.min() > 0:
            # every site is saturated, so a uniform shift changes nothing
            d = d - d.min()
        residuals = {m: abs(float(assignment.loads[m] - caps[m])) for m in active}
        result = SolveResult(d, assignment, active, sweeps, converged, residuals, method, history)
        if not converged:
            log.warning("ascent stopped after %d sweeps without meeting tolerance", sweeps)
            if strict:
                raise NotConverged(result)
    return result
