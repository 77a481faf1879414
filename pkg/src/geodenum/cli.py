"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 input or validation error,
3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time

from . import fixtures
from .mesh import MeshError, TriangleMesh, canonicalize, load_mesh_file, parse_point_spec
from .propagation import DEFAULT_EVENT_CAP, BuildCapExceeded, Mode, build_git
from .query import QueryCapExceeded, build_geodesic_graph, enumerate_geodesics, paths_of_graph
from .serialize import (
    FormatError,
    dumps,
    geodesics_to_dict,
    geodesics_to_obj,
    graph_to_dict,
    load_tree,
    save_tree,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_CAP = 3

log = logging.getLogger("geodenum")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_mesh(arg: str) -> TriangleMesh:
    if arg.startswith("fixture:"):
        return fixtures.by_name(arg[len("fixture:"):])
    return load_mesh_file(arg)


def _radius(args, mesh: TriangleMesh) -> float:
    r = args.radius
    if not r > 0 or not math.isfinite(r):
        raise ValueError("radius must be a positive number")
    return r * mesh.mean_edge_length if args.unit == "mean-edge" else r


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_build(args) -> int:
    mesh = _load_mesh(args.mesh)
    source = canonicalize(mesh, parse_point_spec(args.source))
    R = _radius(args, mesh)
    rows = []
    progress = None
    if args.checkpoint_every:
        def progress(elapsed, radius, n):
            rows.append((elapsed, radius, n))

    t0 = time.perf_counter()
    try:
        tree = build_git(
            mesh, source, R, args.mode, event_cap=args.event_cap, time_budget=args.time_budget,
            progress=progress, progress_every=args.checkpoint_every or 1.0,
        )
    finally:
        if args.checkpoint_every and args.checkpoint_csv:
            with open(args.checkpoint_csv, "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["elapsed_seconds", "radius_reached", "intervals"])
                w.writerows(rows)
    elapsed = time.perf_counter() - t0
    save_tree(tree, args.output)
    stats = tree.stats.as_dict()
    stats["build_seconds"] = elapsed
    stats["memory_bytes"] = tree.arena_bytes()
    stats["propagating_ratio"] = None if math.isnan(tree.stats.propagating_ratio) else tree.stats.propagating_ratio
    stats["radius_mean_edge"] = tree.radius / mesh.mean_edge_length
    print(json.dumps(stats, indent=1), file=sys.stderr if args.quiet_stats else sys.stdout)
    return EXIT_OK


def cmd_query(args) -> int:
    tree = load_tree(args.tree)
    target = canonicalize(tree.mesh, parse_point_spec(args.target))
    paths = enumerate_geodesics(tree, target)
    if args.format == "obj":
        _write(args.output, geodesics_to_obj(paths))
    else:
        _write(args.output, dumps(geodesics_to_dict(paths, tree, target)))
    return EXIT_OK


def cmd_graph(args) -> int:
    tree = load_tree(args.tree)
    if tree.mode is not Mode.REDUCED:
        print("error: graph requires reduced mode", file=sys.stderr)
        return EXIT_INPUT
    target = canonicalize(tree.mesh, parse_point_spec(args.target))
    graph = build_geodesic_graph(tree, target)
    expanded = paths_of_graph(graph, tree.radius) if args.expand else None
    _write(args.output, dumps(graph_to_dict(graph, expanded)))
    return EXIT_OK


BENCH_COLUMNS = [
    "R",
    "R_mean_edge",
    "mode",
    "N",
    "build_seconds",
    "events",
    "hyperbolic_vertex_events",
    "propagating_vertex_events",
    "memory_bytes",
    "dlogN_dlogR",
]


def bench_rows(mesh, source, radii, modes, event_cap=DEFAULT_EVENT_CAP):
    """One row per (mode, R); the slope column compares with the previous R of the same mode."""
    rows = []
    for mode in modes:
        prev = None
        for R in radii:
            t0 = time.perf_counter()
            try:
                tree = build_git(mesh, source, R, mode, event_cap=event_cap)
            except BuildCapExceeded:
                log.warning("%s mode hit the event cap at R=%g; sweep stopped", mode, R)
                break
            dt = time.perf_counter() - t0
            st = tree.stats
            n = len(tree)
            slope = ""
            if prev is not None and prev[1] > 0 and n > 0 and R != prev[0]:
                slope = (math.log(n) - math.log(prev[1])) / (math.log(R) - math.log(prev[0]))
            rows.append({
                "R": R,
                "R_mean_edge": R / mesh.mean_edge_length,
                "mode": Mode(mode).value,
                "N": n,
                "build_seconds": dt,
                "events": st.edge_events + st.vertex_events,
                "hyperbolic_vertex_events": st.hyperbolic_vertex_events,
                "propagating_vertex_events": st.propagating_vertex_events,
                "memory_bytes": tree.arena_bytes(),
                "dlogN_dlogR": slope,
            })
            prev = (R, n)
    return rows


def cmd_bench(args) -> int:
    mesh = _load_mesh(args.mesh)
    source = canonicalize(mesh, parse_point_spec(args.source))
    try:
        radii = [float(r) for r in args.radii.split(",") if r.strip()]
    except ValueError:
        raise ValueError(f"bad radius list {args.radii!r}") from None
    if not radii or any(not r > 0 for r in radii):
        raise ValueError("radii must be positive")
    if args.unit == "mean-edge":
        radii = [r * mesh.mean_edge_length for r in radii]
    modes = [Mode(m) for m in args.modes.split(",")]
    rows = bench_rows(mesh, source, sorted(radii), modes, args.event_cap)
    out = sys.stdout if args.output in (None, "-") else open(args.output, "w", encoding="utf-8", newline="")
    try:
        w = csv.DictWriter(out, fieldnames=BENCH_COLUMNS)
        w.writeheader()
        w.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .oracle import exhaustive_enumerate

    mesh = _load_mesh(args.mesh)
    s = canonicalize(mesh, parse_point_spec(args.source))
    t = canonicalize(mesh, parse_point_spec(args.target))
    R = _radius(args, mesh)
    paths = exhaustive_enumerate(mesh, s, t, R)
    doc = {"geodesics": [{"points": [list(p) for p in g.points], "length": g.length} for g in paths]}
    _write(args.output, dumps(doc))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="geodenum", description="Enumerate geodesics on triangle meshes.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def radius_args(q):
        q.add_argument("--radius", "-R", type=float, required=True)
        q.add_argument("--unit", choices=["mesh", "mean-edge"], default="mesh",
                       help="interpret radii in mesh units or mean edge lengths")

    b = sub.add_parser("build", help="build a geodesic interval tree")
    b.add_argument("mesh", help="OBJ file or fixture:NAME")
    b.add_argument("--source", "-s", required=True, help="vertex:ID | edge:ID:U | face:ID:B0,B1,B2")
    radius_args(b)
    b.add_argument("--mode", choices=[m.value for m in Mode], default="reduced")
    b.add_argument("--output", "-o", required=True)
    b.add_argument("--event-cap", type=int, default=DEFAULT_EVENT_CAP)
    b.add_argument("--time-budget", type=float, default=None, help="stop after this many seconds")
    b.add_argument("--checkpoint-every", type=float, default=None, metavar="SECONDS")
    b.add_argument("--checkpoint-csv", default=None)
    b.add_argument("--quiet-stats", action="store_true", help="print stats to stderr")
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="enumerate geodesics to a target")
    q.add_argument("tree")
    q.add_argument("--target", "-t", required=True)
    q.add_argument("--format", choices=["json", "obj"], default="json")
    q.add_argument("--output", "-o", default=None)
    q.set_defaults(func=cmd_query)

    g = sub.add_parser("graph", help="single-pair geodesic graph")
    g.add_argument("tree")
    g.add_argument("--target", "-t", required=True)
    g.add_argument("--expand", action="store_true", help="also list every path of the graph")
    g.add_argument("--output", "-o", default=None)
    g.set_defaults(func=cmd_graph)

    n = sub.add_parser("bench", help="interval-count growth over a radius sweep")
    n.add_argument("mesh")
    n.add_argument("--source", "-s", required=True)
    n.add_argument("--radii", required=True, help="comma-separated radii")
    n.add_argument("--unit", choices=["mesh", "mean-edge"], default="mesh")
    n.add_argument("--modes", default="complete,reduced")
    n.add_argument("--event-cap", type=int, default=DEFAULT_EVENT_CAP)
    n.add_argument("--output", "-o", default=None)
    n.set_defaults(func=cmd_bench)

    o = sub.add_parser("oracle", help=argparse.SUPPRESS)
    o.add_argument("mesh")
    o.add_argument("--source", "-s", required=True)
    o.add_argument("--target", "-t", required=True)
    radius_args(o)
    o.add_argument("--output", "-o", default=None)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    from .oracle import OracleLimit

    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (BuildCapExceeded, QueryCapExceeded, OracleLimit) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (MeshError, FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
