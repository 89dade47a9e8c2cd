"""Additively weighted Voronoi diagrams on the sphere, whose edges are spherical hyperbolas.

Cell m is ``{x : d(x, S_m) + d_m <= d(x, S_l) + d_l for all l}``.  Along any
geodesic ray leaving S_m the difference ``d(x, S_m) - d(x, S_l)`` never
decreases, so every nonempty cell is star-shaped around its own site and its
boundary is the graph of a radius function over the ray direction psi.  For
one competitor l that radius has the closed form

    r_l(psi) = atan2(cos(delta) - S_m . S_l,  u(psi) . S_l - sin(delta))

with ``delta = (d_l - d_m) / R`` and ``u(psi)`` the unit tangent at S_m.  The
cell radius is the pointwise minimum over competitors; the minimizing
competitor labels the boundary edge.  Tracing and diagram building are
sweeps over psi built on that formula.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import EmptyBisector, EmptySiteSet, NoSharedEdge
from .geometry import Sphere, central_angle, pairwise_distances, tangent_basis, unit
from .voronoi import DEFAULT_STEP, DiagramGraph, Edge, site_positions

VERTEX_TOL = 1e-9


def as_weights(d, n: int) -> np.ndarray:
    w = np.zeros(n) if d is None else np.asarray(d, dtype=float).copy()
    if w.shape != (n,):
        raise ValueError(f"weight vector has shape {w.shape}, expected ({n},)")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    return w


def normalize_weights(d) -> np.ndarray:
    """Shift weights so the smallest is zero.  Assignments are unchanged."""
    d = np.asarray(d, dtype=float)
    return d - d.min() if d.size else d.copy()


def cost_matrix(positions, sites, s: Sphere = Sphere(), threads: int = 1) -> np.ndarray:
    """Geodesic distances from every atom to every site, shape ``(N, n)``.

    Row blocks are independent, so ``threads > 1`` gives identical output.
    """
    x = np.atleast_2d(np.asarray(positions, dtype=float))
    p = site_positions(sites)
    if threads <= 1 or len(x) < 4096:
        return pairwise_distances(x, p, s)
    out = np.empty((len(x), len(p)))
    bounds = np.linspace(0, len(x), threads + 1).astype(int)

    def work(i):
        lo, hi = bounds[i], bounds[i + 1]
        out[lo:hi] = pairwise_distances(x[lo:hi], p, s)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, range(threads)))
    return out


def weighted_argmin(x, sites, d, s: Sphere = Sphere()):
    """Site minimizing ``d(x, S_m) + d_m``; ties go to the lowest index."""
    p = site_positions(sites)
    if len(p) == 0:
        raise EmptySiteSet("no sites")
    w = as_weights(d, len(p))
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    idx = np.argmin(pairwise_distances(x, p, s) + w, axis=1)
    return int(idx[0]) if single else idx


@dataclass
class Assignment:
    """Atom-to-site assignment with per-site loads and total distance.

    ``labels`` gives each atom's site.  Atoms whose mass is divided between
    sites appear in ``splits`` as ``{atom: ((site, mass), ...)}``; their label
    is the site receiving the largest share.
    """

    labels: np.ndarray
    loads: np.ndarray
    total: float
    splits: dict[int, tuple[tuple[int, float], ...]] = field(default_factory=dict)

    def rows(self, masses) -> list[tuple[int, int, float]]:
        """(atom, site, mass) triples in atom order."""
        out = []
        for a, site in enumerate(self.labels):
            if a in self.splits:
                out.extend((a, k, mk) for k, mk in self.splits[a])
            else:
                out.append((a, int(site), float(masses[a])))
        return out


def assignment_from_rows(rows, cost, n: int) -> Assignment:
    """Rebuild loads and total distance from (atom, site, mass) rows.

    Sums use ``math.fsum`` so the result does not depend on row order.
    """
    n_atoms = cost.shape[0]
    per_site: list[list[float]] = [[] for _ in range(n)]
    dist_terms = []
    shares: dict[int, list[tuple[int, float]]] = {}
    for a, k, mk in rows:
        per_site[k].append(mk)
        dist_terms.append(mk * cost[a, k])
        shares.setdefault(a, []).append((k, mk))
    labels = np.full(n_atoms, -1, dtype=int)
    splits = {}
    for a, sh in shares.items():
        labels[a] = max(sh, key=lambda t: (t[1], -t[0]))[0]
        if len(sh) > 1:
            splits[a] = tuple(sh)
    loads = np.array([math.fsum(v) for v in per_site])
    return Assignment(labels, loads, math.fsum(dist_terms), splits)


def assign_by_labels(labels, masses, cost) -> Assignment:
    labels = np.asarray(labels, dtype=int)
    masses = np.asarray(masses, dtype=float)
    n = cost.shape[1]
    loads = np.array([math.fsum(masses[labels == k]) for k in range(n)])
    picked = cost[np.arange(len(labels)), labels]
    return Assignment(labels, loads, math.fsum(masses * picked))


def assign_atoms(positions, masses, sites, d, s: Sphere = Sphere(), threads: int = 1) -> Assignment:
    p = site_positions(sites)
    if len(p) == 0:
        raise EmptySiteSet("no sites")
    w = as_weights(d, len(p))
    cost = cost_matrix(positions, p, s, threads)
    return assign_by_labels(np.argmin(cost + w, axis=1), masses, cost)


def cell_measure(m: int, sites, d, demand, s: Sphere = Sphere()) -> float:
    """Demand mass whose weighted-nearest site is ``m``."""
    a = assign_atoms(demand.positions, demand.masses, sites, d, s)
    return float(a.loads[m])


# --------------------------------------------------------------------------
# boundary sweeps


class _Sweep:
    """Radius functions of all competitors around one base site."""

    def __init__(self, m: int, p: np.ndarray, w: np.ndarray):
        self.m = m
        self.base = p[m]
        self.e1, self.e2 = tangent_basis(p[m])
        others = [l for l in range(len(p)) if l != m]
        dist = np.array([float(central_angle(p[m], p[l])) for l in others])
        delta = np.array([w[l] - w[m] for l in others])
        self.empty = bool(np.any(delta <= -dist + 1e-15))
        keep = (np.abs(delta) < dist) & (np.cos(delta) - p[others] @ p[m] > 0)
        self.sites = [l for l, k in zip(others, keep) if k]
        idx = np.array(keep, dtype=bool)
        q = p[self.sites] if self.sites else np.zeros((0, 3))
        self.num = (np.cos(delta) - p[others] @ p[m])[idx]
        self.sin_delta = np.sin(delta)[idx]
        self.a = q @ self.e1
        self.b = q @ self.e2

    def radii(self, psi) -> np.ndarray:
        psi = np.atleast_1d(np.asarray(psi, dtype=float))
        den = np.cos(psi)[:, None] * self.a + np.sin(psi)[:, None] * self.b - self.sin_delta
        return np.arctan2(self.num, den)

    def radius(self, psi: float, j: int) -> float:
        den = math.cos(psi) * self.a[j] + math.sin(psi) * self.b[j] - self.sin_delta[j]
        return math.atan2(self.num[j], den)

    def point(self, psi, r) -> np.ndarray:
        psi = np.asarray(psi, dtype=float)
        r = np.asarray(r, dtype=float)
        u = np.cos(psi)[..., None] * self.e1 + np.sin(psi)[..., None] * self.e2
        return unit(np.cos(r)[..., None] * self.base + np.sin(r)[..., None] * u)

    def owner_at(self, psi: float) -> int:
        return int(np.argmin(self.radii(psi)[0]))

    def _crossing(self, pa, ja, pb, jb):
        f = lambda t: self.radius(t, ja) - self.radius(t, jb)  # noqa: E731
        fa, fb = f(pa), f(pb)
        if fa >= 0:
            return pa
        if fb <= 0:
            return pb
        return brentq(f, pa, pb, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)

    def _resolve(self, pa, ja, pb, jb, out, depth=0):
        t = self._crossing(pa, ja, pb, jb)
        r = self.radii(t)[0]
        k = int(np.argmin(r))
        ref = r[ja]
        if k not in (ja, jb) and r[k] < ref - 1e-13 and depth < 64:
            self._resolve(pa, ja, t, k, out, depth + 1)
            self._resolve(t, k, pb, jb, out, depth + 1)
            return
        co = tuple(sorted({self.m} | {self.sites[i] for i in np.nonzero(r <= ref + VERTEX_TOL)[0]}))
        out.append((t, ja, jb, co))

    def transitions(self, step: float):
        """Crossings ``(psi, owner_before, owner_after, co_minimal_sites)`` sorted by psi."""
        if not self.sites:
            return []
        k = max(720, math.ceil(2 * math.pi / step))
        psi = np.linspace(0.0, 2 * math.pi, k, endpoint=False)
        own = np.argmin(self.radii(psi), axis=1)
        out = []
        for i in range(k):
            j = (i + 1) % k
            if own[i] != own[j]:
                pb = psi[j] if j else 2 * math.pi
                self._resolve(psi[i], int(own[i]), pb, int(own[j]), out)
        return sorted(((t % (2 * math.pi), a, b, co) for t, a, b, co in out), key=lambda x: x[0])

    def polyline(self, j: int, p0: float, p1: float, step: float) -> np.ndarray:
        """Samples of competitor j's boundary for psi in [p0, p1], spaced <= step."""
        k = max(2, math.ceil((p1 - p0) / step) + 1)
        psi = np.linspace(p0, p1, k)
        for _ in range(60):
            pts = self.point(psi, self.radii(psi)[:, j])
            gaps = central_angle(pts[:-1], pts[1:])
            bad = np.nonzero(gaps > step)[0]
            if bad.size == 0:
                return pts
            mids = 0.5 * (psi[bad] + psi[bad + 1])
            psi = np.sort(np.concatenate([psi, mids]))
        return pts


def _runs(sw: _Sweep, step: float):
    """Maximal psi-intervals with one owning competitor, as (owner_site, p0, p1, co0, co1)."""
    if not sw.sites:
        return []
    tr = sw.transitions(step)
    if not tr:
        j = sw.owner_at(0.0)
        return [(sw.sites[j], j, 0.0, 2 * math.pi, None, None)]
    runs = []
    for i, (t, _, after, co) in enumerate(tr):
        t_next, before_next, _, co_next = tr[(i + 1) % len(tr)]
        if i + 1 == len(tr):
            t_next += 2 * math.pi
        if t_next - t <= 0:
            continue
        runs.append((sw.sites[after], after, t, t_next, co, co_next))
    return runs


def _boundary_check(m, l, p, w, s):
    if m == l:
        raise ValueError("a boundary needs two distinct sites")
    sep = float(central_angle(p[m], p[l]))
    if abs(w[m] - w[l]) >= sep:
        raise EmptyBisector(
            f"|d_{m} - d_{l}| = {abs(w[m] - w[l]) * s.radius:g} >= site separation {sep * s.radius:g}"
        )


def trace_boundary(m: int, l: int, sites, d, s: Sphere = Sphere(), step: float = DEFAULT_STEP):
    """Polylines of the shared edge between cells m and l of the weighted diagram.

    Points satisfy ``d(x, S_m) + d_m = d(x, S_l) + d_l`` and lie where no third
    site is strictly better.  A closed curve repeats its first point at the end.
    """
    p = site_positions(sites)
    w = as_weights(d, len(p)) / s.radius
    _boundary_check(m, l, p, w, s)
    base, other = m, l
    sw = _Sweep(base, p, w)
    if sw.empty:
        base, other = l, m
        sw = _Sweep(base, p, w)
        if sw.empty:
            raise NoSharedEdge(f"cells {m} and {l} are both empty")
    lines = []
    for owner, j, p0, p1, co0, _ in _runs(sw, step):
        if owner != other:
            continue
        pts = sw.polyline(j, p0, p1, step)
        if co0 is None:
            pts[-1] = pts[0]
        lines.append(pts)
    if not lines:
        raise NoSharedEdge(f"cells {m} and {l} do not share an edge")
    return lines


def _cluster(points, tol):
    """Greedy clustering of points within ``tol`` chordal distance; returns labels."""
    labels = np.full(len(points), -1, dtype=int)
    reps = []
    for i, x in enumerate(points):
        for k, r in enumerate(reps):
            if np.linalg.norm(x - r) < tol:
                labels[i] = k
                break
        else:
            labels[i] = len(reps)
            reps.append(x)
    return labels, reps


def build_weighted_diagram(
    sites, d=None, s: Sphere = Sphere(), step: float = DEFAULT_STEP
) -> DiagramGraph:
    """Vertices, edges and cell loops of the weighted diagram.

    Every nonempty cell is swept once; each edge is stored from the side of
    its lower-indexed site and referenced from both cells' loops.  Pairs that
    meet along several arcs get one Edge per arc.
    """
    p = site_positions(sites)
    n = len(p)
    if n == 0:
        raise EmptySiteSet("no sites")
    w_len = as_weights(d, n)
    w = w_len / s.radius
    sweeps = [_Sweep(m, p, w) for m in range(n)]
    runs = {m: (_runs(sw, step) if not sw.empty else []) for m, sw in enumerate(sweeps)}

    raw_vertices, raw_sets = [], []
    for m, sw in enumerate(sweeps):
        for owner, j, p0, p1, co0, co1 in runs[m]:
            if co0 is not None:
                raw_vertices.append(sw.point(p0, sw.radius(p0, j)))
                raw_sets.append(co0)
    labels, reps = _cluster(raw_vertices, 1e-7)
    vertex_sites: list[set[int]] = [set() for _ in reps]
    for lab, co in zip(labels, raw_sets):
        vertex_sites[lab].update(co)

    def vertex_of(x):
        best = min(range(len(reps)), key=lambda k: np.linalg.norm(reps[k] - x))
        return best

    edges: list[Edge] = []
    cells: list[list[int]] = [[] for _ in range(n)]
    lookup: dict[tuple[int, int], list[int]] = {}
    for m, sw in enumerate(sweeps):
        for owner, j, p0, p1, co0, co1 in runs[m]:
            if m > owner:
                continue
            pts = sw.polyline(j, p0, p1, step)
            if co0 is None:
                pts[-1] = pts[0]
                ends = None
            else:
                ends = (vertex_of(pts[0]), vertex_of(pts[-1]))
            lookup.setdefault((m, owner), []).append(len(edges))
            cells[m].append(len(edges))
            edges.append(Edge((m, owner), pts, ends))
    for m, sw in enumerate(sweeps):
        for owner, j, p0, p1, co0, co1 in runs[m]:
            if m < owner:
                continue
            cand = lookup.get((owner, m), [])
            if not cand:
                continue
            if co0 is None:
                cells[m].append(cand[0])
                continue
            x0 = sw.point(p0, sw.radius(p0, j))
            x1 = sw.point(p1, sw.radius(p1, j))
            best = min(
                cand,
                key=lambda e: np.linalg.norm(edges[e].points[-1] - x0)
                + np.linalg.norm(edges[e].points[0] - x1),
            )
            cells[m].append(best)
    vertices = np.array(reps) if reps else np.zeros((0, 3))
    return DiagramGraph(vertices, [tuple(sorted(v)) for v in vertex_sites], edges, cells, w_len)


def edge_label(d, m: int, l: int) -> float:
    """Boundary label ``d_m - d_l`` of the edge between cells m and l."""
    return float(d[m] - d[l])
