"""Tree files and JSON result documents.

Tree files are JSON.  Python's float repr round-trips exactly, so every
numeric column reloads bit-for-bit.  Keys are sorted and no timing data is
stored, which keeps repeated builds byte-identical.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from typing import Iterable

from .mesh import TriangleMesh, format_point_spec, parse_point_spec
from .propagation import BuildStats, GeodesicIntervalTree, Mode
from .query import GeodesicGraph, GeodesicPath

TREE_FORMAT = "geodenum-tree"
TREE_VERSION = 1
RESULT_VERSION = 1


class FormatError(ValueError):
    pass


def tree_to_dict(tree: GeodesicIntervalTree) -> dict:
    mesh = tree.mesh
    reg = tree.registry
    return {
        "format": TREE_FORMAT,
        "version": TREE_VERSION,
        "mode": tree.mode.value,
        "source": format_point_spec(tree.source),
        "radius": tree.radius,
        "mesh": {
            "vertices": [list(p) for p in mesh.positions],
            "faces": [list(f) for f in mesh.faces],
            "eps_angle": mesh.eps_angle,
        },
        "intervals": {
            "parent": list(tree.parent),
            "edge": list(tree.edge),
            "lo": list(tree.lo),
            "hi": list(tree.hi),
            "cx": list(tree.cx),
            "cy": list(tree.cy),
            "depth": list(tree.depth),
            "root": list(tree.root),
        },
        "registry": {
            "records": [[v, iid, arrival, angle] for v, recs in enumerate(reg.records) for iid, arrival, angle in recs],
            "ranges": [[v, mu, nu] for v in sorted(reg.ranges) for mu, nu in reg.ranges[v]],
        },
        "stats": tree.stats.as_dict(),
    }


def dumps_tree(tree: GeodesicIntervalTree) -> str:
    return json.dumps(tree_to_dict(tree), sort_keys=True, separators=(",", ":"), allow_nan=False)


def tree_from_dict(doc: dict) -> GeodesicIntervalTree:
    if doc.get("format") != TREE_FORMAT:
        raise FormatError("not a geodesic interval tree file")
    if doc.get("version") != TREE_VERSION:
        raise FormatError(f"unsupported tree file version {doc.get('version')!r} (expected {TREE_VERSION})")
    try:
        m = doc["mesh"]
        mesh = TriangleMesh(m["vertices"], m["faces"], eps_angle=m["eps_angle"])
        tree = GeodesicIntervalTree(mesh, parse_point_spec(doc["source"]), doc["radius"], Mode(doc["mode"]))
        cols = doc["intervals"]
        n = len(cols["edge"])
        if any(len(cols[k]) != n for k in ("parent", "lo", "hi", "cx", "cy", "depth", "root")):
            raise FormatError("interval columns differ in length")
        for i in range(n):
            tree.add_interval(
                cols["parent"][i], cols["edge"][i], float(cols["lo"][i]), float(cols["hi"][i]),
                complex(cols["cx"][i], cols["cy"][i]), float(cols["depth"][i]), bool(cols["root"][i]),
            )
        for v, iid, arrival, angle in doc["registry"]["records"]:
            tree.registry.add(v, iid, float(arrival), float(angle))
        for v, mu, nu in doc["registry"]["ranges"]:
            tree.registry.ranges[v].append((float(mu), float(nu)))
        tree.stats = BuildStats(**doc["stats"])
    except (KeyError, TypeError, IndexError) as exc:
        raise FormatError(f"malformed tree file: {exc}") from exc
    return tree


def loads_tree(text: str) -> GeodesicIntervalTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"tree file is not valid JSON: {exc}") from exc
    return tree_from_dict(doc)


def save_tree(tree: GeodesicIntervalTree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_tree(tree))


def load_tree(path) -> GeodesicIntervalTree:
    with open(path, encoding="utf-8") as fh:
        return loads_tree(fh.read())


# --------------------------------------------------------------------------
# Results
# --------------------------------------------------------------------------


def _node(n):
    return n if isinstance(n, str) else int(n)


def _num(x):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x


def geodesics_to_dict(paths: Iterable[GeodesicPath], tree: GeodesicIntervalTree, target) -> dict:
    paths = sorted(paths, key=lambda g: g.sort_key())
    return {
        "version": RESULT_VERSION,
        "mode": tree.mode.value,
        "source": format_point_spec(tree.source),
        "target": format_point_spec(target),
        "radius": tree.radius,
        "geodesics": [
            {"points": [list(p) for p in g.points], "length": g.length, "vertices": list(g.vertices)} for g in paths
        ],
    }


def graph_to_dict(graph: GeodesicGraph, expanded=None) -> dict:
    doc = {
        "version": RESULT_VERSION,
        "source": format_point_spec(graph.source),
        "target": format_point_spec(graph.target),
        "radius": graph.radius,
        "nodes": [_node(n) for n in graph.nodes],
        "edges": [
            {
                "from": _node(e.start),
                "to": _node(e.end),
                "length": e.length,
                "points": [list(p) for p in e.points],
                "out_angle": _num(e.out_angle),
                "in_angle": _num(e.in_angle),
            }
            for e in graph.edges
        ],
    }
    if expanded is not None:
        doc["geodesics"] = [
            {"points": [list(p) for p in g.points], "length": g.length, "vertices": list(g.vertices)}
            for g in sorted(expanded, key=lambda g: g.sort_key())
        ]
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def geodesics_to_obj(paths: Iterable[GeodesicPath]) -> str:
    """One ``l`` polyline per geodesic."""
    lines = []
    k = 1
    for g in sorted(paths, key=lambda g: g.sort_key()):
        lines.append(f"# length {g.length!r}")
        for p in g.points:
            lines.append(f"v {p[0]!r} {p[1]!r} {p[2]!r}")
        lines.append("l " + " ".join(str(k + i) for i in range(len(g.points))))
        k += len(g.points)
    return "\n".join(lines) + "\n"


def load_schema(name: str) -> dict:
    """Shipped JSON schema: ``"geodesics"``, ``"graph"`` or ``"tree"``."""
    text = resources.files("geodenum").joinpath("schemas", f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
