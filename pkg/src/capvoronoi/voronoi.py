"""Classical spherical Delaunay triangulation and Voronoi diagram.

The triangulation comes from the 3D convex hull of the site unit vectors.
When the sites fit in one closed hemisphere the hull no longer contains the
origin; those inputs (and all n <= 3 inputs) go through an explicit
bisector-intersection construction instead.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySiteSet, HemisphericSites, TooFewSites
from .geometry import (
    EPS,
    GeoPoint,
    Sphere,
    arc_points,
    central_angle,
    geo_to_unit,
    pairwise_distances,
    tangent_basis,
    unit,
)
from .hull import DEFAULT_SEED, check_distinct, convex_hull_3d

#: Circumcenters closer than this (chordally) are merged into one vertex.
MERGE_TOL = 1e-9
DEFAULT_STEP = math.radians(0.5)


@dataclass(frozen=True)
class Site:
    """A data center.  ``capacity`` is ``math.inf`` for an unbounded site."""

    id: str
    position: GeoPoint
    capacity: float = math.inf
    xyz: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.capacity >= 0):
            raise ValueError(f"site {self.id!r}: capacity must be >= 0, got {self.capacity!r}")
        object.__setattr__(self, "xyz", geo_to_unit(self.position))

    @classmethod
    def from_degrees(cls, id: str, lat_deg: float, lon_deg: float, capacity: float = math.inf):
        return cls(id, GeoPoint.from_degrees(lat_deg, lon_deg), capacity)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.capacity)


def site_positions(sites) -> np.ndarray:
    """``(n, 3)`` unit vectors for a list of Sites or an array of positions."""
    if isinstance(sites, np.ndarray):
        return np.atleast_2d(sites).astype(float, copy=False)
    sites = list(sites)
    if not sites:
        return np.zeros((0, 3))
    if isinstance(sites[0], Site):
        ids = [s.id for s in sites]
        if len(set(ids)) != len(ids):
            raise ValueError("site ids must be unique")
        return np.array([s.xyz for s in sites])
    return np.atleast_2d(np.asarray(sites, dtype=float))


def site_capacities(sites) -> np.ndarray:
    return np.array([s.capacity for s in sites], dtype=float)


@dataclass(frozen=True)
class DelaunayTriangulation:
    points: np.ndarray
    triangles: list[tuple[int, int, int]]
    adjacency: list[list[int]]

    @property
    def n(self) -> int:
        return len(self.points)

    def edges(self) -> set[tuple[int, int]]:
        return {(m, l) for m, nbrs in enumerate(self.adjacency) for l in nbrs if m < l}


@dataclass(frozen=True)
class Edge:
    """One boundary polyline between cells ``sites[0]`` and ``sites[1]``.

    ``ends`` holds the vertex indices of the first and last sample, or None
    for a closed ring (first sample repeated as the last).
    """

    sites: tuple[int, int]
    points: np.ndarray
    ends: tuple[int, int] | None

    @property
    def closed(self) -> bool:
        return self.ends is None


@dataclass(frozen=True)
class DiagramGraph:
    vertices: np.ndarray
    vertex_sites: list[tuple[int, ...]]
    edges: list[Edge]
    cells: list[list[int]]
    weights: np.ndarray | None = None

    def adjacent_pairs(self) -> set[tuple[int, int]]:
        return {tuple(sorted(e.sites)) for e in self.edges}


def _adjacency(n, triangles):
    nbrs = [set() for _ in range(n)]
    for a, b, c in triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            nbrs[u].add(v)
            nbrs[v].add(u)
    return [sorted(s) for s in nbrs]


def delaunay_from_hull(faces, sites) -> DelaunayTriangulation:
    p = site_positions(sites)
    tris = [tuple(int(i) for i in f) for f in faces]
    return DelaunayTriangulation(p, tris, _adjacency(len(p), tris))


def _fan(center, members, p):
    """Triangulate the sites co-minimal at ``center`` so each triangle's normal points at it."""
    e1, e2 = tangent_basis(center)
    ang = [math.atan2(float(p[k] @ e2), float(p[k] @ e1)) for k in members]
    ring = [k for _, k in sorted(zip(ang, members))]
    return [(ring[0], ring[i], ring[i + 1]) for i in range(1, len(ring) - 1)]


def delaunay_by_bisectors(sites, *, tol: float = MERGE_TOL) -> DelaunayTriangulation:
    """Triangulation built by intersecting the bisectors of every site triple.

    Each triple has two equidistant points (the poles of its plane); a pole
    with no strictly closer site is a Voronoi vertex.  Vertices sharing the
    same co-minimal site set are merged and fan-triangulated.  O(n^4); meant
    for hemispheric and coplanar inputs, which are small in practice.
    """
    p = site_positions(sites)
    n = len(p)
    if n < 3:
        raise TooFewSites(f"need at least 3 sites for a triangulation, got {n}")
    check_distinct(p)
    seen: dict[tuple[int, ...], list[np.ndarray]] = {}
    combos = np.array(list(itertools.combinations(range(n), 3)), dtype=int)
    for start in range(0, len(combos), 20000):
        tri = combos[start:start + 20000]
        a, b, c = p[tri[:, 0]], p[tri[:, 1]], p[tri[:, 2]]
        nrm = np.cross(b - a, c - a)
        norm = np.linalg.norm(nrm, axis=1)
        ok = norm > EPS
        nrm = nrm[ok] / norm[ok, None]
        a = a[ok]
        for sign in (1.0, -1.0):
            v = sign * nrm
            r = np.sum(v * a, axis=1)
            dots = v @ p.T
            empty = np.max(dots, axis=1) <= r + tol
            for vi, ri, di in zip(v[empty], r[empty], dots[empty]):
                members = tuple(int(k) for k in np.nonzero(di >= ri - tol)[0])
                known = seen.setdefault(members, [])
                if all(np.linalg.norm(vi - u) > 1e-6 for u in known):
                    known.append(vi)
    tris = []
    for members, vs in sorted(seen.items()):
        for v in vs:
            tris.extend(_fan(v, list(members), p))
    return DelaunayTriangulation(p, tris, _adjacency(n, tris))


def delaunay_triangulation(sites, *, seed: int = DEFAULT_SEED) -> DelaunayTriangulation:
    """Spherical Delaunay triangulation, dispatching to the bisector path when needed."""
    p = site_positions(sites)
    if len(p) < 3:
        raise TooFewSites(f"need at least 3 sites for a triangulation, got {len(p)}")
    if len(p) == 3:
        return delaunay_by_bisectors(p)
    try:
        faces = convex_hull_3d(p, seed=seed)
    except HemisphericSites:
        return delaunay_by_bisectors(p)
    return delaunay_from_hull(faces, p)


def _pick_arc_via(v1, v2, m, l, p):
    """Midpoint of the bisector arc v1 -> v2 on which sites m and l are nearest."""
    bis = p[m] - p[l]
    s = v1 + v2
    if np.linalg.norm(s) > 1e-9:
        w = unit(s)
    else:
        w = unit(np.cross(unit(bis), v1))
    best, best_score = None, -math.inf
    for cand in (w, -w):
        dots = p @ cand
        score = min(dots[m], dots[l]) - np.max(dots)
        if score > best_score:
            best, best_score = cand, score
    return best


def _bisector_ring(a, b, step) -> np.ndarray:
    normal = unit(a - b)
    e1, e2 = tangent_basis(normal)
    k = max(3, math.ceil(2 * math.pi / step))
    t = np.linspace(0.0, 2 * math.pi, k + 1)
    pts = unit(np.cos(t)[:, None] * e1 + np.sin(t)[:, None] * e2)
    pts[-1] = pts[0]
    return pts


def voronoi_from_delaunay(
    t: DelaunayTriangulation, s: Sphere = Sphere(), *, step: float = DEFAULT_STEP
) -> DiagramGraph:
    p = t.points
    n = len(p)
    if n == 0:
        raise EmptySiteSet("no sites")
    if n == 1:
        return DiagramGraph(np.zeros((0, 3)), [], [], [[]])
    if n == 2:
        edge = Edge((0, 1), _bisector_ring(p[0], p[1], step), None)
        return DiagramGraph(np.zeros((0, 3)), [], [edge], [[0], [0]])

    tris = t.triangles
    centers = np.array([unit(np.cross(p[b] - p[a], p[c] - p[a])) for a, b, c in tris])
    edge_tri = {}
    for i, (a, b, c) in enumerate(tris):
        for u, v in ((a, b), (b, c), (c, a)):
            edge_tri[(u, v)] = i

    # merge coincident circumcenters of adjacent triangles (cocircular sites)
    parent = list(range(len(tris)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for (u, v), i in edge_tri.items():
        j = edge_tri[(v, u)]
        if np.linalg.norm(centers[i] - centers[j]) < MERGE_TOL:
            parent[find(i)] = find(j)
    roots = sorted({find(i) for i in range(len(tris))})
    vid = {r: k for k, r in enumerate(roots)}
    tri_vertex = [vid[find(i)] for i in range(len(tris))]
    vertices = np.array([centers[r] for r in roots])
    members = [set() for _ in roots]
    for i, tri in enumerate(tris):
        members[tri_vertex[i]].update(tri)

    edges: list[Edge] = []
    edge_index: dict[tuple[int, int], int] = {}
    for (u, v), i in sorted(edge_tri.items()):
        if u > v:
            continue
        j = edge_tri[(v, u)]
        vi, vj = tri_vertex[i], tri_vertex[j]
        if vi == vj:
            continue
        a, b = vertices[vi], vertices[vj]
        via = _pick_arc_via(a, b, u, v, p)
        edge_index[(u, v)] = len(edges)
        edges.append(Edge((u, v), arc_points(a, b, via, step), (vi, vj)))

    cells: list[list[int]] = [[] for _ in range(n)]
    for m in range(n):
        start = next((i for i, tri in enumerate(tris) if m in tri), None)
        if start is None:
            continue
        i = start
        while True:
            a, b, c = tris[i]
            k = (a, b, c).index(m)
            nxt = (a, b, c)[(k + 2) % 3]
            key = (min(m, nxt), max(m, nxt))
            if key in edge_index:
                cells[m].append(edge_index[key])
            i = edge_tri[(m, nxt)]
            if i == start:
                break
    return DiagramGraph(
        vertices, [tuple(sorted(ms)) for ms in members], edges, cells, np.zeros(n)
    )


def spherical_voronoi(
    sites, s: Sphere = Sphere(), *, step: float = DEFAULT_STEP, seed: int = DEFAULT_SEED
) -> DiagramGraph:
    """Classical Voronoi diagram of any number of distinct sites."""
    p = site_positions(sites)
    if len(p) == 0:
        raise EmptySiteSet("no sites")
    if len(p) < 3:
        check_distinct(p)
        adj = [[1], [0]] if len(p) == 2 else [[]]
        return voronoi_from_delaunay(DelaunayTriangulation(p, [], adj), s, step=step)
    return voronoi_from_delaunay(delaunay_triangulation(p, seed=seed), s, step=step)


def nearest_site(x, sites, s: Sphere = Sphere()):
    """Index of the geodesically nearest site; ties go to the lowest index.

    ``x`` may be one unit vector (returns an int) or an ``(N, 3)`` array.
    """
    p = site_positions(sites)
    if len(p) == 0:
        raise EmptySiteSet("no sites")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    idx = np.argmin(pairwise_distances(x, p, s), axis=1)
    return int(idx[0]) if single else idx


def site_distance(sites, m: int, l: int) -> float:
    p = site_positions(sites)
    return float(central_angle(p[m], p[l]))
