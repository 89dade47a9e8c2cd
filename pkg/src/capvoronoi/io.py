"""File formats: site and demand CSVs, run reports, assignments, weights, GeoJSON.

All files are UTF-8, comma separated, and lines starting with ``#`` are
ignored.  Angles are degrees on disk and radians in memory.

Sites::

    id,lat_deg,lon_deg,capacity        # capacity "inf" (or empty) = unbounded

Point demand::

    lat_deg,lon_deg[,mass]             # mass defaults to 1

Raster demand (first non-comment line is the header, then ``rows`` lines of
``cols`` densities from north to south, pixel-center registration)::

    rows=2,cols=4,lat_min=-90,lat_max=90,lon_min=-180,lon_max=180
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .demand import DiscreteDemand, RasterDemand
from .errors import DuplicateId, MismatchedAssignment, NegativeMass, ParseError
from .geometry import unit_to_latlon
from .voronoi import DiagramGraph, Site

UNBOUNDED_TOKENS = {"", "inf", "+inf", "infinity", "unbounded", "none"}
RASTER_KEYS = ("rows", "cols", "lat_min", "lat_max", "lon_min", "lon_max")


def _data_lines(path):
    """(line number, stripped text) for every non-blank, non-comment line."""
    with open(path, encoding="utf-8") as f:
        for no, raw in enumerate(f, start=1):
            text = raw.strip()
            if text and not text.startswith("#"):
                yield no, text


def _fields(no, text):
    return next(csv.reader([text], skipinitialspace=True))


def _number(no, token, what) -> float:
    try:
        v = float(token)
    except ValueError:
        raise ParseError(no, f"{what} {token!r} is not a number") from None
    if math.isnan(v):
        raise ParseError(no, f"{what} is NaN")
    return v


def _latlon(no, lat_tok, lon_tok):
    lat = _number(no, lat_tok, "latitude")
    lon = _number(no, lon_tok, "longitude")
    if not -90.0 <= lat <= 90.0:
        raise ParseError(no, f"latitude {lat:g} outside [-90, 90]")
    if not math.isfinite(lon) or not -360.0 <= lon <= 360.0:
        raise ParseError(no, f"longitude {lon:g} outside [-360, 360]")
    return lat, lon


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def parse_sites(path) -> list[Site]:
    sites, seen = [], {}
    for no, text in _data_lines(path):
        row = _fields(no, text)
        if len(row) not in (3, 4):
            raise ParseError(no, f"expected id,lat_deg,lon_deg[,capacity], got {len(row)} fields")
        sid = row[0].strip()
        if not sid:
            raise ParseError(no, "empty site id")
        if sid in seen:
            raise DuplicateId(no, f"site id {sid!r} already used on line {seen[sid]}")
        lat, lon = _latlon(no, row[1], row[2])
        cap_tok = row[3].strip().lower() if len(row) == 4 else ""
        if cap_tok in UNBOUNDED_TOKENS:
            cap = math.inf
        else:
            cap = _number(no, cap_tok, "capacity")
            if cap < 0:
                raise ParseError(no, f"capacity {cap:g} is negative")
        seen[sid] = no
        sites.append(Site.from_degrees(sid, lat, lon, cap))
    if not sites:
        raise ParseError(0, "no sites in file")
    return sites


def _parse_points(path) -> DiscreteDemand:
    lat, lon, mass = [], [], []
    for no, text in _data_lines(path):
        row = _fields(no, text)
        if len(row) not in (2, 3):
            raise ParseError(no, f"expected lat_deg,lon_deg[,mass], got {len(row)} fields")
        a, b = _latlon(no, row[0], row[1])
        m = _number(no, row[2], "mass") if len(row) == 3 else 1.0
        if m < 0:
            raise NegativeMass(no, f"mass {m:g} is negative")
        if m == 0 or not math.isfinite(m):
            raise ParseError(no, "mass must be positive and finite")
        lat.append(a)
        lon.append(b)
        mass.append(m)
    if not mass:
        raise ParseError(0, "no demand points in file")
    return DiscreteDemand.from_latlon(np.radians(lat), np.radians(lon), np.array(mass))


def _parse_header(no, text) -> dict:
    tokens = [t for t in re.split(r"[,\s]+", text) if t]
    out = {}
    for tok in tokens:
        key, sep, val = tok.partition("=")
        if not sep or key not in RASTER_KEYS:
            raise ParseError(no, f"bad raster header token {tok!r}")
        out[key] = _number(no, val, key)
    missing = [k for k in RASTER_KEYS if k not in out]
    if missing:
        raise ParseError(no, f"raster header lacks {', '.join(missing)}")
    for k in ("rows", "cols"):
        if out[k] < 1 or out[k] != int(out[k]):
            raise ParseError(no, f"{k} must be a positive integer")
        out[k] = int(out[k])
    return out


def _parse_raster(path, radius: float) -> RasterDemand:
    lines = _data_lines(path)
    try:
        no, text = next(lines)
    except StopIteration:
        raise ParseError(0, "empty raster file") from None
    hdr = _parse_header(no, text)
    rows = []
    for no, text in lines:
        row = [_number(no, t, "density") for t in _fields(no, text)]
        if len(row) != hdr["cols"]:
            raise ParseError(no, f"expected {hdr['cols']} densities, got {len(row)}")
        for v in row:
            if v < 0:
                raise NegativeMass(no, f"density {v:g} is negative")
            if not math.isfinite(v):
                raise ParseError(no, "density must be finite")
        rows.append(row)
    if len(rows) != hdr["rows"]:
        raise ParseError(no, f"expected {hdr['rows']} raster rows, got {len(rows)}")
    try:
        dem = RasterDemand(
            np.array(rows),
            math.radians(hdr["lat_min"]),
            math.radians(hdr["lat_max"]),
            math.radians(hdr["lon_min"]),
            math.radians(hdr["lon_max"]),
            radius,
        )
    except ValueError as exc:
        raise ParseError(1, str(exc)) from None
    if dem.masses.size == 0:
        raise ParseError(1, "raster has no positive density")
    return dem


def parse_demand(path, kind: str = "points", radius: float = 1.0):
    """Read a demand file.  ``radius`` scales raster pixel areas."""
    if kind == "points":
        return _parse_points(path)
    if kind == "raster":
        return _parse_raster(path, radius)
    raise ValueError(f"unknown demand kind {kind!r}")


# --------------------------------------------------------------------------
# outputs


def _cap_out(c: float):
    return None if math.isinf(c) else c


@dataclass
class RunReport:
    inputs: dict
    feasible: bool
    total_capacity: float | None
    total_demand: float
    deficit: float
    site_ids: list
    weights: list
    loads: list
    capacities: list
    active_set: list
    total_distance: float | None
    iterations: int
    converged: bool
    method: str
    radius: float
    note: str = ""
    wall_time: float | None = None
    residuals: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.site_ids)
        if not (len(self.weights) == len(self.loads) == len(self.capacities) == n):
            raise ValueError("weights, loads and capacities must have one entry per site")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls(**json.loads(text))

    def capacity_array(self) -> np.ndarray:
        return np.array([math.inf if c is None else c for c in self.capacities], dtype=float)


def write_weights(path, sites, d) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("id,weight\n")
        for s, w in zip(sites, d):
            f.write(f"{s.id},{float(w)!r}\n")


def read_weights(path, sites) -> np.ndarray:
    index = {s.id: k for k, s in enumerate(sites)}
    d = np.full(len(sites), np.nan)
    for no, text in _data_lines(path):
        row = _fields(no, text)
        if row == ["id", "weight"]:
            continue
        if len(row) != 2:
            raise ParseError(no, "expected id,weight")
        if row[0] not in index:
            raise ParseError(no, f"unknown site id {row[0]!r}")
        d[index[row[0]]] = _number(no, row[1], "weight")
    if np.isnan(d).any():
        missing = [s.id for s, v in zip(sites, d) if np.isnan(v)]
        raise ParseError(0, f"no weight for sites {', '.join(missing)}")
    return d


def write_assignment(path, demand, sites, assignment) -> None:
    """Rows ``atom,site,mass``; ``atom`` is the point index or linear pixel index."""
    ids = demand.atom_ids
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("atom,site,mass\n")
        for a, k, mk in assignment.rows(demand.masses):
            f.write(f"{int(ids[a])},{sites[k].id},{float(mk)!r}\n")


def read_assignment(path, demand, sites) -> list[tuple[int, int, float]]:
    """(atom row, site index, mass) triples checked against the inputs."""
    index = {s.id: k for k, s in enumerate(sites)}
    row_of = {int(a): i for i, a in enumerate(demand.atom_ids)}
    out = []
    for no, text in _data_lines(path):
        row = _fields(no, text)
        if row == ["atom", "site", "mass"]:
            continue
        if len(row) != 3:
            raise ParseError(no, "expected atom,site,mass")
        try:
            atom = int(row[0])
        except ValueError:
            raise ParseError(no, f"atom {row[0]!r} is not an integer") from None
        if atom not in row_of:
            raise MismatchedAssignment(f"line {no}: atom {atom} is not in the demand")
        if row[1] not in index:
            raise MismatchedAssignment(f"line {no}: site {row[1]!r} is not in the site list")
        out.append((row_of[atom], index[row[1]], _number(no, row[2], "mass")))
    got = np.zeros(len(demand.masses))
    for a, _, mk in out:
        got[a] += mk
    bad = np.nonzero(~np.isclose(got, demand.masses, rtol=1e-9, atol=0.0))[0]
    if bad.size:
        a = int(bad[0])
        raise MismatchedAssignment(
            f"atom {int(demand.atom_ids[a])} has assigned mass {got[a]!r}, demand {demand.masses[a]!r}"
        )
    return out


def _lonlat(points, digits: int = 9) -> list[list[float]]:
    lat, lon = unit_to_latlon(np.asarray(points))
    return [[round(math.degrees(float(b)), digits), round(math.degrees(float(a)), digits)] for a, b in zip(lat, lon)]


def diagram_geojson(graph: DiagramGraph, sites, d) -> dict:
    """FeatureCollection with one MultiLineString per adjacent pair and one Point per site."""
    d = np.asarray(d, dtype=float)
    by_pair: dict[tuple[int, int], list] = {}
    for e in graph.edges:
        by_pair.setdefault(tuple(sorted(e.sites)), []).append(_lonlat(e.points))
    features = []
    for (m, l) in sorted(by_pair):
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "MultiLineString", "coordinates": by_pair[(m, l)]},
                "properties": {
                    "site_m": sites[m].id,
                    "site_l": sites[l].id,
                    "d_ml": float(d[m] - d[l]),
                },
            }
        )
    for s, w in zip(sites, d):
        lat, lon = s.position.to_degrees()
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [round(lon, 9), round(lat, 9)]},
                "properties": {"id": s.id, "capacity": _cap_out(s.capacity), "weight": float(w)},
            }
        )
    return {"type": "FeatureCollection", "features": features}


def write_geojson(path, collection: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(collection, f, separators=(",", ":"), allow_nan=False)
        f.write("\n")
