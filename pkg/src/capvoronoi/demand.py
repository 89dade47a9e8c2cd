"""User demand measures: weighted points or a lat/lon density raster.

Both kinds expose the same atom view (``positions``, ``masses``,
``atom_ids``) so downstream code never branches on the measure type.
Raster atoms are pixel centers carrying the pixel's whole mass; pixels with
zero mass are dropped from the atom view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Sphere, latlon_to_unit
from .weighted import assign_atoms


@dataclass(frozen=True)
class DiscreteDemand:
    positions: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        mass = np.asarray(self.masses, dtype=float).reshape(-1)
        if pos.shape != (len(mass), 3):
            raise ValueError("positions must be (N, 3) with one mass per point")
        if not np.all(np.isfinite(mass)) or np.any(mass <= 0):
            raise ValueError("point masses must be positive and finite")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "masses", mass)

    @classmethod
    def from_latlon(cls, lat, lon, masses=None) -> "DiscreteDemand":
        """Points from radian arrays; unit masses by default."""
        pos = latlon_to_unit(lat, lon).reshape(-1, 3)
        return cls(pos, np.ones(len(pos)) if masses is None else masses)

    @property
    def atom_ids(self) -> np.ndarray:
        return np.arange(len(self.masses))

    @property
    def kind(self) -> str:
        return "points"


@dataclass(frozen=True)
class RasterDemand:
    """Density grid over a lat/lon box; row 0 is the northern edge.

    Pixel mass is ``density * R^2 * dlon * (sin(lat_top) - sin(lat_bottom))``.
    Angles are in radians.
    """

    density: np.ndarray
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    radius: float = 1.0
    positions: np.ndarray = field(init=False, repr=False)
    masses: np.ndarray = field(init=False, repr=False)
    atom_ids: np.ndarray = field(init=False, repr=False)
    pixel_mass: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        dens = np.atleast_2d(np.asarray(self.density, dtype=float))
        if dens.size == 0:
            raise ValueError("raster must have at least one pixel")
        if not np.all(np.isfinite(dens)) or np.any(dens < 0):
            raise ValueError("densities must be finite and nonnegative")
        if not (-math.pi / 2 <= self.lat_min < self.lat_max <= math.pi / 2):
            raise ValueError("need -pi/2 <= lat_min < lat_max <= pi/2")
        if not (self.lon_min < self.lon_max <= self.lon_min + 2 * math.pi):
            raise ValueError("need lon_min < lon_max <= lon_min + 2*pi")
        rows, cols = dens.shape
        lat_edges = np.linspace(self.lat_max, self.lat_min, rows + 1)
        dlon = (self.lon_max - self.lon_min) / cols
        band = np.sin(lat_edges[:-1]) - np.sin(lat_edges[1:])
        area = self.radius**2 * dlon * band
        pixel_mass = dens * area[:, None]
        lat_c = 0.5 * (lat_edges[:-1] + lat_edges[1:])
        lon_c = self.lon_min + (np.arange(cols) + 0.5) * dlon
        lat_g, lon_g = np.meshgrid(lat_c, lon_c, indexing="ij")
        flat = pixel_mass.reshape(-1)
        ids = np.nonzero(flat > 0)[0]
        object.__setattr__(self, "density", dens)
        object.__setattr__(self, "pixel_mass", pixel_mass)
        object.__setattr__(self, "atom_ids", ids)
        object.__setattr__(self, "masses", flat[ids])
        object.__setattr__(
            self, "positions", latlon_to_unit(lat_g.reshape(-1)[ids], lon_g.reshape(-1)[ids])
        )

    @classmethod
    def uniform(cls, rows: int, cols: int, value: float = 1.0, radius: float = 1.0):
        """Constant density over the whole sphere."""
        return cls(np.full((rows, cols), value), -math.pi / 2, math.pi / 2, -math.pi, math.pi, radius)

    @property
    def shape(self) -> tuple[int, int]:
        return self.density.shape

    @property
    def kind(self) -> str:
        return "raster"


DemandMeasure = DiscreteDemand | RasterDemand


def total_mass(m: DemandMeasure) -> float:
    if isinstance(m, RasterDemand):
        return math.fsum(m.pixel_mass.reshape(-1))
    return math.fsum(m.masses)


def integrate_assigned(m: DemandMeasure, sites, d, s: Sphere = Sphere(), threads: int = 1):
    """Per-site assigned mass and total distance under the weighted diagram V(d)."""
    a = assign_atoms(m.positions, m.masses, sites, d, s, threads)
    return a.loads, a.total
