"""Spherical primitives.

Points on the sphere are carried as unit 3-vectors (numpy arrays of shape
``(3,)`` or ``(N, 3)``).  Lengths are angles scaled by ``Sphere.radius``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTriangle

#: Degeneracy threshold shared by every predicate in the package.
EPS = 1e-12


@dataclass(frozen=True)
class Sphere:
    radius: float = 1.0

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"sphere radius must be positive, got {self.radius!r}")


@dataclass(frozen=True)
class GeoPoint:
    """Latitude/longitude in radians.

    Longitude is wrapped into (-pi, pi]; at the poles it is canonicalized to 0.
    """

    lat: float
    lon: float

    def __post_init__(self):
        if not (-math.pi / 2 <= self.lat <= math.pi / 2):
            raise ValueError(f"latitude {self.lat!r} outside [-pi/2, pi/2]")
        if not math.isfinite(self.lon):
            raise ValueError(f"longitude {self.lon!r} is not finite")
        lon = _wrap_lon(self.lon)
        if abs(self.lat) == math.pi / 2:
            lon = 0.0
        object.__setattr__(self, "lon", lon)

    @classmethod
    def from_degrees(cls, lat_deg: float, lon_deg: float) -> "GeoPoint":
        return cls(math.radians(lat_deg), math.radians(lon_deg))

    def to_degrees(self) -> tuple[float, float]:
        return math.degrees(self.lat), math.degrees(self.lon)


def _wrap_lon(lon: float) -> float:
    if -math.pi < lon <= math.pi:
        return lon
    lon = math.fmod(lon + math.pi, 2 * math.pi)
    if lon <= 0:
        lon += 2 * math.pi
    return lon - math.pi


def unit(v) -> np.ndarray:
    """Normalize a vector (or each row of an array) to unit length."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise ValueError("cannot normalize a zero vector")
    return v / n


def geo_to_unit(p: GeoPoint) -> np.ndarray:
    cl = math.cos(p.lat)
    return unit((cl * math.cos(p.lon), cl * math.sin(p.lon), math.sin(p.lat)))


def unit_to_geo(v) -> GeoPoint:
    x, y, z = (float(c) for c in v)
    h = math.hypot(x, y)
    lat = math.atan2(z, h)
    lon = 0.0 if h == 0.0 else math.atan2(y, x)
    return GeoPoint(lat, lon)


def latlon_to_unit(lat, lon) -> np.ndarray:
    """Vectorized conversion of radian arrays to an ``(N, 3)`` array."""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    cl = np.cos(lat)
    return unit(np.stack([cl * np.cos(lon), cl * np.sin(lon), np.sin(lat)], axis=-1))


def unit_to_latlon(v) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(v, dtype=float)
    h = np.hypot(v[..., 0], v[..., 1])
    lat = np.arctan2(v[..., 2], h)
    lon = np.where(h == 0.0, 0.0, np.arctan2(v[..., 1], v[..., 0]))
    return lat, lon


def central_angle(a, b) -> np.ndarray:
    """Great-circle angle between unit vectors, broadcasting over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cr = np.linalg.norm(np.cross(a, b), axis=-1)
    return np.arctan2(cr, np.sum(a * b, axis=-1))


def geodesic_distance(a, b, s: Sphere = Sphere()) -> float:
    return float(s.radius * central_angle(a, b))


def pairwise_distances(x, sites, s: Sphere = Sphere()) -> np.ndarray:
    """Distance matrix of shape ``(len(x), len(sites))``.

    Each entry is computed elementwise with the same formula as
    :func:`geodesic_distance`, so values agree bit-for-bit with scalar calls.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    sites = np.atleast_2d(np.asarray(sites, dtype=float))
    out = np.empty((x.shape[0], sites.shape[0]))
    for j in range(sites.shape[0]):
        out[:, j] = central_angle(x, sites[j])
    return s.radius * out


def circumcenter(a, b, c, eps: float = EPS) -> np.ndarray:
    """Spherical circumcenter of triangle ``abc``.

    The result is the pole of the plane through the three points on the side
    the triangle's normal ``(b - a) x (c - a)`` points to, so a counterclockwise
    (outward) hull face maps to the Voronoi vertex above it.
    """
    a, b, c = (np.asarray(p, dtype=float) for p in (a, b, c))
    n = np.cross(b - a, c - a)
    norm = np.linalg.norm(n)
    if norm < eps:
        raise DegenerateTriangle("triangle vertices are (nearly) collinear or coincident")
    return n / norm


def orient3d(a, b, c, d, eps: float = EPS) -> int:
    """Sign of ``det[b - a, c - a, d - a]``; magnitudes below ``eps`` report 0."""
    a = np.asarray(a, dtype=float)
    det = float(np.dot(np.cross(np.asarray(b) - a, np.asarray(c) - a), np.asarray(d) - a))
    if abs(det) < eps:
        return 0
    return 1 if det > 0 else -1


def tangent_basis(p) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal tangent vectors ``(e1, e2)`` at unit vector ``p`` with ``e1 x e2 = p``."""
    p = np.asarray(p, dtype=float)
    ref = np.array([0.0, 0.0, 1.0]) if abs(p[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = unit(np.cross(ref, p))
    e2 = np.cross(p, e1)
    return e1, e2


def arc_points(a, b, via, step: float) -> np.ndarray:
    """Sample the great-circle arc from ``a`` to ``b`` that passes through ``via``.

    ``via`` only selects which of the two arcs is meant (needed when ``a`` and
    ``b`` are antipodal or the long way round is wanted).  Consecutive samples
    are at most ``step`` radians apart; both endpoints are included exactly.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    via = np.asarray(via, dtype=float)
    normal = np.cross(a, via)
    nn = np.linalg.norm(normal)
    if nn < EPS:
        raise ValueError("arc direction is undefined: 'via' coincides with an endpoint")
    normal /= nn
    w = np.cross(normal, a)
    # angle from a to b measured in the rotation sense that reaches `via` first
    total = math.atan2(float(np.dot(b, w)), float(np.dot(b, a)))
    if total <= 0:
        total += 2 * math.pi
    k = max(1, math.ceil(total / step))
    t = np.linspace(0.0, total, k + 1)
    pts = np.cos(t)[:, None] * a + np.sin(t)[:, None] * w
    pts[0] = a
    pts[-1] = b
    return unit(pts)
