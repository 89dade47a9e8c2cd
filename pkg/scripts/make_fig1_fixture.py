"""Regenerate the bundled ten-city fixture.

The population raster is synthetic: each metropolitan area below (approximate
2020 US Census MSA populations, rounded) is spread as a Gaussian over land
pixels of a coarse outline of the contiguous US, and the remainder of a 331M
national total is spread as a rural background three times denser east of
100W than west of it.  It is meant to be population-like, not accurate.

    python scripts/make_fig1_fixture.py
"""

import math
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "capvoronoi" / "data"
EARTH_RADIUS_KM = 6371.0
RES = 0.25
LAT_MIN, LAT_MAX, LON_MIN, LON_MAX = 24.0, 50.0, -125.0, -66.0
NATIONAL_TOTAL = 331e6

SITES = [
    ("seattle", 47.6062, -122.3321, "inf"),
    ("san_francisco", 37.7749, -122.4194, "15000000"),
    ("phoenix", 33.4484, -112.0740, "inf"),
    ("denver", 39.7392, -104.9903, "inf"),
    ("chicago", 41.8781, -87.6298, "inf"),
    ("houston", 29.7604, -95.3698, "inf"),
    ("atlanta", 33.7490, -84.3880, "20000000"),
    ("boston", 42.3601, -71.0589, "inf"),
    ("new_york", 40.7128, -74.0060, "inf"),
    ("miami", 25.7617, -80.1918, "inf"),
]

# name, lat, lon, population (millions)
METROS = """
New York,40.71,-74.01,19.8
Los Angeles,34.05,-118.24,13.2
Chicago,41.88,-87.63,9.6
Dallas,32.78,-96.80,7.6
Houston,29.76,-95.37,7.1
Washington,38.91,-77.04,6.4
Philadelphia,39.95,-75.17,6.2
Miami,25.76,-80.19,6.1
Atlanta,33.75,-84.39,6.1
Boston,42.36,-71.06,4.9
Phoenix,33.45,-112.07,4.8
San Francisco,37.77,-122.42,4.7
Riverside,33.98,-117.38,4.6
Detroit,42.33,-83.05,4.4
Seattle,47.61,-122.33,4.0
Minneapolis,44.98,-93.27,3.7
San Diego,32.72,-117.16,3.3
Tampa,27.95,-82.46,3.2
Denver,39.74,-104.99,3.0
Baltimore,39.29,-76.61,2.8
St. Louis,38.63,-90.20,2.8
Orlando,28.54,-81.38,2.7
Charlotte,35.23,-80.84,2.7
San Antonio,29.42,-98.49,2.6
Portland,45.52,-122.68,2.5
Sacramento,38.58,-121.49,2.4
Pittsburgh,40.44,-80.00,2.4
Austin,30.27,-97.74,2.3
Las Vegas,36.17,-115.14,2.3
Cincinnati,39.10,-84.51,2.3
Kansas City,39.10,-94.58,2.2
Columbus,39.96,-83.00,2.1
Indianapolis,39.77,-86.16,2.1
Cleveland,41.50,-81.69,2.1
San Jose,37.34,-121.89,2.0
Nashville,36.16,-86.78,2.0
Virginia Beach,36.85,-76.29,1.8
Providence,41.82,-71.41,1.7
Jacksonville,30.33,-81.66,1.6
Milwaukee,43.04,-87.91,1.6
Raleigh,35.78,-78.64,1.4
Oklahoma City,35.47,-97.52,1.4
Memphis,35.15,-90.05,1.3
Richmond,37.54,-77.44,1.3
Louisville,38.25,-85.76,1.3
New Orleans,29.95,-90.07,1.3
Salt Lake City,40.76,-111.89,1.3
Hartford,41.76,-72.68,1.2
Buffalo,42.89,-78.88,1.2
Birmingham,33.52,-86.80,1.1
Rochester,43.16,-77.61,1.1
Grand Rapids,42.96,-85.67,1.1
Tucson,32.22,-110.97,1.0
Tulsa,36.15,-95.99,1.0
Fresno,36.74,-119.79,1.0
Worcester,42.26,-71.80,0.98
Omaha,41.26,-95.93,0.97
Bridgeport,41.19,-73.20,0.96
Greenville,34.85,-82.40,0.93
Albuquerque,35.08,-106.65,0.92
Bakersfield,35.37,-119.02,0.91
Albany,42.65,-73.76,0.90
Knoxville,35.96,-83.92,0.88
El Paso,31.76,-106.49,0.87
Baton Rouge,30.45,-91.19,0.87
McAllen,26.20,-98.23,0.87
New Haven,41.31,-72.92,0.86
Allentown,40.60,-75.49,0.86
Oxnard,34.20,-119.18,0.84
Columbia,34.00,-81.03,0.83
Sarasota,27.34,-82.53,0.83
Dayton,39.76,-84.19,0.81
Charleston,32.78,-79.93,0.80
Greensboro,36.07,-79.79,0.78
Stockton,37.96,-121.29,0.78
Cape Coral,26.56,-81.95,0.76
Boise,43.62,-116.20,0.76
Colorado Springs,38.83,-104.82,0.76
Little Rock,34.75,-92.29,0.75
Lakeland,28.04,-81.95,0.72
Akron,41.08,-81.52,0.70
Des Moines,41.59,-93.62,0.71
Springfield MA,42.10,-72.59,0.70
Ogden,41.22,-111.97,0.70
Madison,43.07,-89.40,0.68
Winston-Salem,36.10,-80.24,0.68
Deltona,29.03,-81.30,0.67
Syracuse,43.05,-76.15,0.66
Wichita,37.69,-97.34,0.65
Provo,40.23,-111.66,0.67
Toledo,41.65,-83.54,0.65
Durham,35.99,-78.90,0.65
Augusta,33.47,-81.97,0.61
Palm Bay,28.03,-80.59,0.61
Jackson,32.30,-90.18,0.59
Harrisburg,40.27,-76.88,0.59
Spokane,47.66,-117.43,0.59
Scranton,41.41,-75.66,0.57
Chattanooga,35.05,-85.31,0.56
Lancaster,40.04,-76.31,0.55
Modesto,37.64,-120.99,0.55
Portland ME,43.66,-70.26,0.55
Fayetteville,36.06,-94.16,0.55
Lansing,42.73,-84.56,0.54
Lexington,38.04,-84.50,0.52
Pensacola,30.42,-87.22,0.51
Myrtle Beach,33.69,-78.89,0.50
Huntsville,34.73,-86.59,0.49
Santa Rosa,38.44,-122.71,0.49
Reno,39.53,-119.81,0.49
Killeen,31.12,-97.73,0.48
Lafayette,30.22,-92.02,0.48
Visalia,36.33,-119.29,0.47
Asheville,35.60,-82.55,0.47
Springfield MO,37.21,-93.29,0.47
Vallejo,38.10,-122.26,0.45
Santa Barbara,34.42,-119.70,0.45
Salinas,36.68,-121.66,0.44
Mobile,30.69,-88.04,0.43
Salem,44.94,-123.04,0.43
Corpus Christi,27.80,-97.40,0.42
Fort Wayne,41.08,-85.14,0.42
Gulfport,30.37,-89.09,0.42
Flint,43.01,-83.69,0.40
Peoria,40.69,-89.59,0.40
Savannah,32.08,-81.09,0.40
Beaumont,30.08,-94.13,0.40
Montgomery,32.37,-86.30,0.39
Shreveport,32.53,-93.75,0.39
Tallahassee,30.44,-84.28,0.39
Eugene,44.05,-123.09,0.38
Ann Arbor,42.28,-83.74,0.37
Gainesville,29.65,-82.32,0.34
Rockford,42.27,-89.09,0.34
Columbus GA,32.46,-84.99,0.33
Lubbock,33.58,-101.86,0.32
Roanoke,37.27,-79.94,0.31
Evansville,37.97,-87.57,0.31
Wilmington,34.23,-77.94,0.30
Sioux Falls,43.55,-96.73,0.28
Waco,31.55,-97.15,0.28
Amarillo,35.22,-101.83,0.27
Fargo,46.88,-96.79,0.25
Macon,32.84,-83.63,0.23
Billings,45.78,-108.50,0.18
Cheyenne,41.14,-104.82,0.10
"""

# coarse outline of the contiguous US (lon, lat)
OUTLINE = [
    (-124.7, 48.4), (-123.0, 49.0), (-95.2, 49.0), (-89.6, 48.0), (-84.6, 46.5),
    (-82.5, 43.0), (-79.0, 43.3), (-76.5, 44.2), (-74.7, 45.0), (-71.5, 45.0),
    (-69.2, 47.4), (-67.8, 47.0), (-67.0, 44.8), (-70.0, 43.7), (-70.6, 42.0),
    (-70.0, 41.6), (-73.9, 40.5), (-74.1, 39.8), (-75.5, 38.5), (-75.9, 37.0),
    (-76.0, 35.5), (-75.5, 35.2), (-77.9, 33.9), (-79.9, 32.6), (-81.0, 31.5),
    (-81.3, 30.0), (-80.0, 26.8), (-80.1, 25.2), (-81.1, 25.1), (-82.0, 26.5),
    (-82.8, 27.9), (-82.6, 29.0), (-83.7, 29.9), (-85.3, 29.7), (-86.5, 30.4),
    (-88.5, 30.4), (-89.5, 30.1), (-89.4, 29.0), (-90.5, 29.1), (-92.0, 29.6),
    (-93.8, 29.7), (-94.8, 29.3), (-96.5, 28.3), (-97.4, 27.3), (-97.2, 25.9),
    (-99.1, 26.4), (-100.3, 28.0), (-101.4, 29.8), (-103.0, 29.0), (-104.5, 29.7),
    (-106.5, 31.8), (-108.2, 31.3), (-111.0, 31.3), (-114.8, 32.5), (-117.1, 32.5),
    (-118.5, 34.0), (-120.6, 34.6), (-121.9, 36.6), (-122.5, 37.8), (-123.7, 39.0),
    (-124.2, 40.3), (-124.1, 42.0), (-124.5, 43.0), (-123.9, 46.2),
]


def inside(lon, lat, poly):
    """Even-odd ray casting, vectorized over points."""
    res = np.zeros(lon.shape, dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        crosses = (y1 > lat) != (y2 > lat)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (lat - y1) * (x2 - x1) / (y2 - y1)
        res ^= crosses & (lon < xint)
    return res


def main():
    rows = round((LAT_MAX - LAT_MIN) / RES)
    cols = round((LON_MAX - LON_MIN) / RES)
    lat_edges = np.linspace(LAT_MAX, LAT_MIN, rows + 1)
    lat_c = 0.5 * (lat_edges[:-1] + lat_edges[1:])
    lon_c = LON_MIN + (np.arange(cols) + 0.5) * RES
    lat, lon = np.meshgrid(lat_c, lon_c, indexing="ij")
    area = (
        EARTH_RADIUS_KM**2
        * math.radians(RES)
        * (np.sin(np.radians(lat_edges[:-1])) - np.sin(np.radians(lat_edges[1:])))
    )[:, None] * np.ones((1, cols))
    land = inside(lon, lat, OUTLINE)

    pop = np.zeros((rows, cols))
    metro_total = 0.0
    for line in METROS.strip().splitlines():
        name, mlat, mlon, mpop = line.split(",")
        mlat, mlon, mpop = float(mlat), float(mlon), float(mpop) * 1e6
        sigma = 0.12 + 0.08 * math.sqrt(mpop / 1e6)
        dx = (lon - mlon) * math.cos(math.radians(mlat))
        kern = np.exp(-0.5 * ((lat - mlat) ** 2 + dx**2) / sigma**2) * land
        if kern.sum() == 0:
            raise SystemExit(f"{name} has no land pixels")
        pop += mpop * kern / kern.sum()
        metro_total += mpop
    rural = np.where(lon > -100.0, 3.0, 1.0) * area * land
    pop += (NATIONAL_TOTAL - metro_total) * rural / rural.sum()
    density = pop / area

    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / "fig1_population.csv", "w") as f:
        f.write("# Synthetic population density (people per km^2), 0.25 deg pixels,\n")
        f.write("# pixel-center registration, first data row is the northern edge.\n")
        f.write("# Metro populations are approximate 2020 US Census MSA figures spread as\n")
        f.write("# Gaussians over a coarse land outline plus a rural background; generated\n")
        f.write("# by scripts/make_fig1_fixture.py.  Not a faithful population map.\n")
        f.write(f"rows={rows},cols={cols},lat_min={LAT_MIN:g},lat_max={LAT_MAX:g},"
                f"lon_min={LON_MIN:g},lon_max={LON_MAX:g}\n")
        for r in range(rows):
            f.write(",".join("0" if v == 0 else f"{v:.6g}" for v in density[r]) + "\n")
    with open(OUT / "fig1_sites.csv", "w") as f:
        f.write("# Ten data-center cities; San Francisco and Atlanta are capacity-limited.\n")
        f.write("# id,lat_deg,lon_deg,capacity\n")
        for sid, la, lo, cap in SITES:
            f.write(f"{sid},{la},{lo},{cap}\n")
    print(f"{rows}x{cols} raster, total {pop.sum():.4g} people, {int(land.sum())} land pixels")


if __name__ == "__main__":
    main()
