"""Randomized incremental 3D convex hull with conflict lists.

Expected O(n log n) for points on a sphere.  Faces are index triples whose
normal ``(b - a) x (c - a)`` points away from the hull interior.
"""

from __future__ import annotations

import numpy as np

from .errors import DuplicateSites, HemisphericSites, TooFewSites
from .geometry import EPS

DEFAULT_SEED = 20240917


def _det(p, a, b, c, q) -> float:
    ax, ay, az = p[a]
    bx, by, bz = p[b]
    cx, cy, cz = p[c]
    qx, qy, qz = p[q]
    ux, uy, uz = bx - ax, by - ay, bz - az
    vx, vy, vz = cx - ax, cy - ay, cz - az
    wx, wy, wz = qx - ax, qy - ay, qz - az
    return (uy * vz - uz * vy) * wx + (uz * vx - ux * vz) * wy + (ux * vy - uy * vx) * wz


def check_distinct(points: np.ndarray, eps: float = EPS) -> None:
    """Raise DuplicateSites if two points are within ``eps`` radians of each other."""
    n = len(points)
    if n < 2:
        return
    # chordal distance ~ angle for small separations
    order = np.lexsort(points.T[::-1])
    pts = points[order]
    tol = max(eps, 1e-15)
    for i in range(n - 1):
        j = i + 1
        while j < n and pts[j, 0] - pts[i, 0] <= tol:
            if np.linalg.norm(pts[j] - pts[i]) <= tol:
                raise DuplicateSites(
                    f"points {int(order[i])} and {int(order[j])} coincide within {eps:g}"
                )
            j += 1


def _initial_simplex(p: np.ndarray, eps: float) -> tuple[int, int, int, int] | None:
    n = len(p)
    i0 = 0
    i1 = int(np.argmax(np.linalg.norm(p - p[i0], axis=1)))
    cr = np.linalg.norm(np.cross(p[i1] - p[i0], p - p[i0]), axis=1)
    i2 = int(np.argmax(cr))
    if cr[i2] < eps:
        return None
    normal = np.cross(p[i1] - p[i0], p[i2] - p[i0])
    vol = (p - p[i0]) @ normal
    i3 = int(np.argmax(np.abs(vol)))
    if abs(vol[i3]) < eps or len({i0, i1, i2, i3}) < 4 or n < 4:
        return None
    return i0, i1, i2, i3


def convex_hull_3d(
    points,
    *,
    eps: float = EPS,
    seed: int = DEFAULT_SEED,
    require_origin_inside: bool = True,
) -> list[tuple[int, int, int]]:
    """Triangular faces of the convex hull of unit vectors, outward oriented.

    Raises HemisphericSites when the origin is not strictly inside the hull
    (this includes all coplanar inputs) unless ``require_origin_inside`` is off.
    """
    p = np.asarray(points, dtype=float)
    n = len(p)
    if n < 4:
        raise TooFewSites(f"need at least 4 points for a 3D hull, got {n}")
    check_distinct(p, eps)

    simplex = _initial_simplex(p, eps)
    if simplex is None:
        raise HemisphericSites("all points are coplanar")
    i0, i1, i2, i3 = simplex
    p = [tuple(map(float, row)) for row in p]
    if _det(p, i0, i1, i2, i3) > 0:
        i1, i2 = i2, i1

    faces: dict[int, tuple[int, int, int]] = {}
    edge_face: dict[tuple[int, int], int] = {}
    face_conf: dict[int, set[int]] = {}
    point_conf: dict[int, set[int]] = {}
    next_id = 0

    def add_face(a, b, c, candidates):
        nonlocal next_id
        fid = next_id
        next_id += 1
        faces[fid] = (a, b, c)
        edge_face[(a, b)] = fid
        edge_face[(b, c)] = fid
        edge_face[(c, a)] = fid
        conf = set()
        for q in candidates:
            if _det(p, a, b, c, q) > eps:
                conf.add(q)
                point_conf[q].add(fid)
        face_conf[fid] = conf
        return fid

    rng = np.random.default_rng(seed)
    rest = [i for i in rng.permutation(n).tolist() if i not in (i0, i1, i2, i3)]
    for q in rest:
        point_conf[q] = set()
    for a, b, c in ((i0, i1, i2), (i0, i3, i1), (i1, i3, i2), (i2, i3, i0)):
        add_face(a, b, c, rest)

    for q in rest:
        visible = point_conf.pop(q)
        if not visible:
            # every point on a sphere is a hull vertex; only near-duplicates hide
            raise DuplicateSites(f"point {q} is not a hull vertex (near-duplicate input)")
        horizon = []
        for fid in visible:
            a, b, c = faces[fid]
            for u, v in ((a, b), (b, c), (c, a)):
                if edge_face[(v, u)] not in visible:
                    horizon.append((u, v, fid, edge_face[(v, u)]))
        removed_conf = {fid: face_conf[fid] for fid in visible}
        for fid in visible:
            a, b, c = faces.pop(fid)
            for u, v in ((a, b), (b, c), (c, a)):
                if edge_face.get((u, v)) == fid:
                    del edge_face[(u, v)]
            for r in face_conf.pop(fid):
                if r in point_conf:
                    point_conf[r].discard(fid)
        for u, v, old, nbr in horizon:
            cand = (removed_conf[old] | face_conf[nbr]) - {q}
            add_face(u, v, q, sorted(cand))

    out = sorted(faces.values(), key=lambda f: _canonical(f))
    if require_origin_inside:
        p.append((0.0, 0.0, 0.0))
        for a, b, c in out:
            if _det(p, a, b, c, len(p) - 1) > -eps:
                raise HemisphericSites("sites lie in one closed hemisphere")
    return [_canonical(f) for f in out]


def _canonical(f):
    a, b, c = f
    k = min(range(3), key=lambda i: f[i])
    return (f[k], f[(k + 1) % 3], f[(k + 2) % 3])
