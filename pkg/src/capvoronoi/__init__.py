"""Capacity-constrained weighted Voronoi diagrams on the sphere.

Sites (data centers) with optional capacities partition a demand measure on
the sphere into cells of an additively weighted Voronoi diagram; weights are
chosen so that no site receives more demand than it can serve while total
distance stays minimal.
"""

from .demand import DiscreteDemand, RasterDemand, integrate_assigned, total_mass
from .errors import (
    CapVoronoiError,
    DuplicateId,
    EmptyBisector,
    Infeasible,
    MismatchedAssignment,
    NegativeMass,
    NoSharedEdge,
    NotConverged,
    ParseError,
)
from .geometry import GeoPoint, Sphere, central_angle, geodesic_distance, pairwise_distances
from .solver import SolveResult, SolverConfig, check_feasibility, detect_active_set, dual_objective, solve
from .transport import TransportInstance, brute_force, check_exchange_optimality, potential_gap, solve_exact
from .voronoi import Site, delaunay_triangulation, nearest_site, spherical_voronoi, voronoi_from_delaunay
from .weighted import (
    Assignment,
    build_weighted_diagram,
    cell_measure,
    edge_label,
    trace_boundary,
    weighted_argmin,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment", "CapVoronoiError", "DiscreteDemand", "DuplicateId", "EmptyBisector", "GeoPoint",
    "Infeasible", "MismatchedAssignment", "NegativeMass", "NoSharedEdge", "NotConverged", "ParseError",
    "RasterDemand", "Site", "SolveResult", "SolverConfig", "Sphere", "TransportInstance", "brute_force",
    "build_weighted_diagram", "cell_measure", "central_angle", "check_exchange_optimality",
    "check_feasibility", "delaunay_triangulation", "detect_active_set", "dual_objective", "edge_label",
    "geodesic_distance", "integrate_assigned", "nearest_site", "pairwise_distances", "potential_gap",
    "solve", "solve_exact", "spherical_voronoi", "total_mass", "trace_boundary", "voronoi_from_delaunay",
    "weighted_argmin",
]
