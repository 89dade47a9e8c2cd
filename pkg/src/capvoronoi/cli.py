"""Command-line entry point: ``capvoronoi solve | diagram | check``.

Exit codes: 0 success, 1 usage or input error, 2 infeasible instance,
3 solver did not converge, 4 ``check`` found a violation.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from .demand import DiscreteDemand
from .errors import CapVoronoiError, Infeasible
from .geometry import Sphere
from .io import (
    RunReport,
    _cap_out,
    diagram_geojson,
    file_digest,
    parse_demand,
    parse_sites,
    read_assignment,
    read_weights,
    write_assignment,
    write_geojson,
    write_weights,
)
from .solver import SolverConfig, check_feasibility, solve
from .transport import TransportInstance, check_exchange_optimality, potential_gap
from .voronoi import site_capacities, site_positions
from .weighted import assignment_from_rows, build_weighted_diagram, cost_matrix

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_NOT_CONVERGED, EXIT_CHECK_FAILED = 0, 1, 2, 3, 4
EARTH_RADIUS_KM = 6371.0
GAP_SLACK = 1e-8  # potential gap allowance, relative to the radius


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _count(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="capvoronoi", description="Capacity-constrained weighted Voronoi diagrams on the sphere.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("solve", help="find weights so every site stays within capacity")
    sp.add_argument("--sites", required=True, type=Path)
    sp.add_argument("--demand", required=True, type=Path)
    sp.add_argument("--demand-kind", choices=("points", "raster"), default="points")
    sp.add_argument("--radius-km", type=_positive, default=EARTH_RADIUS_KM)
    sp.add_argument("--tol", type=float, default=None, help="capacity slack relative to total demand")
    sp.add_argument("--max-iter", type=_count, default=500, help="coordinate sweeps per active set")
    sp.add_argument("--threads", type=_count, default=1)
    sp.add_argument("--timing", action="store_true", help="record wall time in the report")
    sp.add_argument("--no-exact-fallback", action="store_true", help="do not fall back to the exact LP if ascent stalls")
    sp.add_argument("--out-dir", required=True, type=Path)

    dp = sub.add_parser("diagram", help="write diagram boundaries as GeoJSON")
    dp.add_argument("--sites", required=True, type=Path)
    dp.add_argument("--weights", type=Path)
    dp.add_argument("--step-deg", type=_positive, default=0.5)
    dp.add_argument("--radius-km", type=_positive, default=EARTH_RADIUS_KM)
    dp.add_argument("--out", required=True, type=Path)

    cp = sub.add_parser("check", help="verify an assignment against capacities and optimality")
    cp.add_argument("--sites", required=True, type=Path)
    cp.add_argument("--demand", required=True, type=Path)
    cp.add_argument("--demand-kind", choices=("points", "raster"), default="points")
    cp.add_argument("--assignment", required=True, type=Path)
    cp.add_argument("--weights", type=Path)
    cp.add_argument("--radius-km", type=_positive, default=EARTH_RADIUS_KM)
    cp.add_argument("--tol", type=float, default=None)
    return p


def _report(args, sites, demand, feas, result=None, wall=None) -> RunReport:
    caps = site_capacities(sites)
    n = len(sites)
    inputs = {
        "sites": {"path": str(args.sites), "sha256": file_digest(args.sites)},
        "demand": {"path": str(args.demand), "sha256": file_digest(args.demand), "kind": args.demand_kind},
    }
    if result is None:
        return RunReport(
            inputs, False, _cap_out(feas.capacity), feas.demand, feas.deficit, [s.id for s in sites],
            [0.0] * n, [0.0] * n, [_cap_out(c) for c in caps], [], None, 0, False, "none",
            args.radius_km, note="infeasible: total capacity below total demand", wall_time=wall,
        )
    note = "classical Voronoi" if not np.any(result.weights) else "weighted diagram"
    return RunReport(
        inputs,
        True,
        _cap_out(feas.capacity),
        feas.demand,
        0.0,
        [s.id for s in sites],
        [float(w) for w in result.weights],
        [float(v) for v in result.loads],
        [_cap_out(c) for c in caps],
        [sites[m].id for m in result.active_set],
        float(result.total_distance),
        int(result.iterations),
        bool(result.converged),
        result.method,
        args.radius_km,
        note=note,
        wall_time=wall,
        residuals={sites[m].id: float(r) for m, r in sorted(result.residuals.items())},
    )


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    sites = parse_sites(args.sites)
    demand = parse_demand(args.demand, args.demand_kind, args.radius_km)
    s = Sphere(args.radius_km)
    cfg = SolverConfig(
        tol=args.tol, max_inner=args.max_iter, threads=args.threads, exact_fallback=not args.no_exact_fallback
    )
    args.out_dir.mkdir(parents=True, exist_ok=True)
    feas = check_feasibility(sites, demand)
    if not feas.ok:
        report = _report(args, sites, demand, feas, wall=(time.perf_counter() - t0) if args.timing else None)
        (args.out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
        print(f"infeasible: capacity {feas.capacity!r} short of demand {feas.demand!r}; deficit {feas.deficit!r}",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    try:
        result = solve(sites, demand, s, cfg)
    except Infeasible as exc:  # pragma: no cover - guarded above
        print(f"infeasible: deficit {exc.deficit!r}", file=sys.stderr)
        return EXIT_INFEASIBLE
    wall = (time.perf_counter() - t0) if args.timing else None
    report = _report(args, sites, demand, feas, result, wall)
    (args.out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    write_assignment(args.out_dir / "assignment.csv", demand, sites, result.assignment)
    write_weights(args.out_dir / "weights.csv", sites, result.weights)
    print(f"{report.note}; method {report.method}; total distance {report.total_distance:.6g}")
    for sid, w, load, cap in zip(report.site_ids, report.weights, report.loads, report.capacities):
        cap_txt = "unbounded" if cap is None else f"{cap:.6g}"
        print(f"  {sid}: load {load:.6g} / {cap_txt}, weight {w:.6g}")
    if not result.converged:
        print("solver did not converge within its iteration caps", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_diagram(args) -> int:
    sites = parse_sites(args.sites)
    d = read_weights(args.weights, sites) if args.weights else np.zeros(len(sites))
    graph = build_weighted_diagram(sites, d, Sphere(args.radius_km), math.radians(args.step_deg))
    collection = diagram_geojson(graph, sites, d)
    write_geojson(args.out, collection)
    print(f"{len(graph.adjacent_pairs())} boundary features, {len(sites)} sites -> {args.out}")
    return EXIT_OK


def cmd_check(args) -> int:
    sites = parse_sites(args.sites)
    demand = parse_demand(args.demand, args.demand_kind, args.radius_km)
    s = Sphere(args.radius_km)
    rows = read_assignment(args.assignment, demand, sites)
    n = len(sites)
    cost = cost_matrix(demand.positions, site_positions(sites), s)
    got = assignment_from_rows(rows, cost, n)
    caps = site_capacities(sites)
    discrete = isinstance(demand, DiscreteDemand)
    tol = args.tol if args.tol is not None else (1e-9 if discrete else 1e-6)
    slack = tol * float(demand.masses.sum())
    ok = True

    print(f"total distance {got.total!r}")
    over = [k for k in range(n) if got.loads[k] > caps[k] + slack]
    for k in range(n):
        cap_txt = "unbounded" if math.isinf(caps[k]) else repr(float(caps[k]))
        flag = "  OVER" if k in over else ""
        print(f"  {sites[k].id}: load {float(got.loads[k])!r} / {cap_txt}{flag}")
    if over:
        ok = False
        print("capacity: violated at " + ", ".join(sites[k].id for k in over))
    else:
        print("capacity: ok")

    flow = np.zeros((len(demand.masses), n))
    for a, k, mk in rows:
        flow[a, k] += mk
    inst = TransportInstance(cost, demand.masses, caps, s.radius)
    if discrete:
        v = check_exchange_optimality(flow, inst)
        if v is None:
            print("exchange: ok")
        else:
            ok = False
            m, l = v.pair
            print(f"exchange: violation between {sites[m].id} and {sites[l].id}, "
                  f"users {v.users[0]} and {v.users[1]}, gain {v.gain!r}")
    else:
        print("exchange: skipped (raster demand)")
    if args.weights:
        d = read_weights(args.weights, sites)
        gap = potential_gap(flow, d, inst)
        verdict = "ok" if gap <= GAP_SLACK * s.radius else "violated"
        if verdict != "ok":
            ok = False
        print(f"potential gap: {gap!r} ({verdict})")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


COMMANDS = {"solve": cmd_solve, "diagram": cmd_diagram, "check": cmd_check}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (CapVoronoiError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
