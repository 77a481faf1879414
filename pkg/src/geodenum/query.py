"""Geodesic enumeration and single-pair geodesic graphs over a finished tree."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional, Union

from .geom2d import circ_offset, direction_angle_at_vertex, project_on_edge, wrap
from .mesh import (
    EPS_ANGLE,
    AtVertex,
    InFace,
    OnEdge,
    SurfacePoint,
    TriangleMesh,
    VertexClass,
    canonicalize,
    vector_angle,
)
from .propagation import GeodesicIntervalTree, Mode, incoming_angle

EPS_PATH = 1e-9
# extent membership slack, relative to the edge length
EXTENT_REL_TOL = 1e-9
DEFAULT_DEPTH_CAP = 10**4
DEFAULT_PATH_CAP = 10**6

Point3 = tuple[float, float, float]
Node = Union[str, int]  # "s", "t" or a mesh vertex id


class QueryCapExceeded(RuntimeError):
    def __init__(self, message: str, partial: list):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class GeodesicPath:
    """Polyline from s to t.

    ``features[i]`` tags point ``i``: ``("source",)``, ``("target",)``,
    ``("edge", a, b)`` for an edge crossing between vertices ``a < b``, or
    ``("vertex", v)``.  ``faces[i]`` is the face holding segment ``i``.
    """

    points: tuple[Point3, ...]
    length: float
    vertices: tuple[int, ...]
    features: tuple[tuple, ...] = ()
    faces: tuple[int, ...] = ()

    def sort_key(self):
        return (self.length, tuple(c for p in self.points for c in p))


@dataclass(frozen=True)
class PrimitiveGeodesic:
    points: tuple[Point3, ...]
    length: float
    start: Node
    end: Node
    out_angle: Optional[float]  # direction leaving ``start`` when it is a vertex
    in_angle: Optional[float]  # direction from ``end`` back along the path, when a vertex
    features: tuple[tuple, ...] = ()
    faces: tuple[int, ...] = ()

    @property
    def is_source(self) -> bool:
        return self.start == "s"


@dataclass
class GeodesicGraph:
    source: SurfacePoint
    target: SurfacePoint
    radius: float
    nodes: list[Node] = field(default_factory=lambda: ["s", "t"])
    edges: list[PrimitiveGeodesic] = field(default_factory=list)
    tau: dict[int, float] = field(default_factory=dict)

    def out_edges(self, node: Node) -> list[PrimitiveGeodesic]:
        return [e for e in self.edges if e.start == node]


def _dist3(a: Point3, b: Point3) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def _polyline_length(pts) -> float:
    return sum(_dist3(pts[i], pts[i + 1]) for i in range(len(pts) - 1))


# --------------------------------------------------------------------------
# GetIntervals
# --------------------------------------------------------------------------


def _same_point(mesh: TriangleMesh, a: SurfacePoint, b: SurfacePoint) -> bool:
    return _dist3(mesh.point_position(a), mesh.point_position(b)) <= 1e-12 * mesh.mean_edge_length


def _candidates(tree: GeodesicIntervalTree, t: SurfacePoint) -> list[tuple[int, complex]]:
    """(interval, target in the interval's frame) pairs that yield a geodesic to t."""
    mesh = tree.mesh
    t = canonicalize(mesh, t)
    if _same_point(mesh, t, tree.source):
        return []
    R = tree.radius
    out: list[tuple[int, complex]] = []
    if isinstance(t, AtVertex):
        return [(iid, 0j) for iid, arrival, _ in tree.registry.records[t.vertex] if arrival < R]
    if isinstance(t, InFace):
        tf = mesh.point_in_face(t, t.face)
        for h in range(3 * t.face, 3 * t.face + 3):
            _scan_halfedge(tree, h, mesh.face_to_he(h, tf), out)
        return out
    h0 = mesh.edge_he[t.edge]
    for h, u in ((h0, t.u), (mesh.twin[h0], 1.0 - t.u)):
        if h == -1:
            continue
        L = mesh.length[h]
        p = complex(u * L, 0.0)
        tol = EXTENT_REL_TOL * L
        for iid in tree.by_halfedge[h]:
            if tree.lo[iid] - tol <= p.real <= tree.hi[iid] + tol:
                c = tree.center(iid)
                if abs(p - c) + tree.depth[iid] < R:
                    out.append((iid, p))
        # rays running along the edge itself reach t through a neighbouring extent
        pf = mesh.he_to_face(h, p)
        for k in (mesh.next(h), mesh.prev(h)):
            pk = mesh.face_to_he(k, pf)
            for iid, q in _scan_halfedge(tree, k, pk, []):
                ch = mesh.face_to_he(h, mesh.he_to_face(k, tree.center(iid)))
                if abs(ch.imag) <= tol:
                    out.append((iid, q))
    return out


def _scan_halfedge(tree: GeodesicIntervalTree, h: int, p: complex, out: list) -> list:
    mesh = tree.mesh
    L = mesh.length[h]
    tol = EXTENT_REL_TOL * L
    R = tree.radius
    cx, cy, lo, hi, depth = tree.cx, tree.cy, tree.lo, tree.hi, tree.depth
    for iid in tree.by_halfedge[h]:
        dy = cy[iid] - p.imag
        if dy <= 0.0:
            continue
        x = cx[iid] + (p.real - cx[iid]) * cy[iid] / dy
        if lo[iid] - tol <= x <= hi[iid] + tol:
            c = complex(cx[iid], cy[iid])
            d = abs(p - c)
            if d > 0.0 and d + depth[iid] < R:
                out.append((iid, p))
    return out


def get_intervals(tree: GeodesicIntervalTree, t: SurfacePoint) -> list[int]:
    """Intervals whose geodesics reach ``t`` with length below the radius."""
    return [iid for iid, _ in _candidates(tree, t)]


# --------------------------------------------------------------------------
# Backtracking
# --------------------------------------------------------------------------


def _edge_tag(mesh: TriangleMesh, h: int) -> tuple:
    a, b = mesh.origin[h], mesh.dest(h)
    return ("edge", a, b) if a < b else ("edge", b, a)


def _walk(tree: GeodesicIntervalTree, iid: int, p: complex, stop_at_root: bool):
    """Trace back from ``p`` in the frame of ``iid``.

    Returns reversed lists (points, features, faces, vertices) plus the last
    interval visited.  Points exclude the final endpoint ``p`` itself.
    """
    mesh = tree.mesh
    pts, feats, faces, verts = [], [], [], []
    cur = iid
    while True:
        h = tree.edge[cur]
        faces.append(h // 3)
        par = tree.parent[cur]
        if tree.root[cur]:
            if par < 0:
                pts.append(mesh.point_position(tree.source))
                feats.append(("source",))
                return pts, feats, faces, verts, cur
            v = mesh.origin[mesh.prev(h)]
            pts.append(mesh.positions[v])
            feats.append(("vertex", v))
            if stop_at_root:
                return pts, feats, faces, verts, cur
            verts.append(v)
            cur, p = par, 0j
            continue
        hp = tree.edge[par]
        tw = mesh.twin[hp]
        rot, tr = mesh.to_next[tw] if h == mesh.next(tw) else mesh.to_prev[tw]
        inv = rot.conjugate()
        pt = (p - tr) * inv
        if pt.imag <= 1e-14 * mesh.length[hp]:
            xt = pt.real
        else:
            ct = (tree.center(cur) - tr) * inv
            xt = project_on_edge(ct, pt)
        L = mesh.length[hp]
        xh = min(max(L - xt, 0.0), L)
        pts.append(mesh.point_on_halfedge_3d(hp, xh))
        feats.append(_edge_tag(mesh, hp))
        cur, p = par, complex(xh, 0.0)


def _finish(pts, feats, faces):
    """Drop coincident consecutive points (and their zero-length segments)."""
    P, F, S = [pts[0]], [feats[0]], []
    for i in range(1, len(pts)):
        if _dist3(pts[i], P[-1]) <= 1e-12:
            if feats[i][0] != "edge":
                F[-1] = feats[i]
            continue
        P.append(pts[i])
        F.append(feats[i])
        S.append(faces[i - 1])
    return tuple(P), tuple(F), tuple(S)


def grazes_vertex(mesh: TriangleMesh, points, features) -> bool:
    """Whether an edge crossing sits on a curved or boundary endpoint of its edge."""
    tol = EXTENT_REL_TOL * mesh.mean_edge_length
    for q, tag in zip(points, features):
        if tag[0] != "edge":
            continue
        for v in tag[1:]:
            if _dist3(q, mesh.positions[v]) <= tol:
                if mesh.boundary_vertex[v] or mesh.vclass[v] is not VertexClass.EUCLIDEAN:
                    return True
    return False


def _target_3d(tree: GeodesicIntervalTree, iid: int, p: complex) -> Point3:
    return tree.mesh.he_to_3d(tree.edge[iid], p) if p != 0j else tree.mesh.positions[tree.mesh.origin[tree.edge[iid]]]


def construct_geodesic(tree: GeodesicIntervalTree, iid: int, p: complex, target: Optional[Point3] = None) -> GeodesicPath:
    """Full geodesic from s to the point ``p`` (frame of interval ``iid``)."""
    pts, feats, faces, verts, _ = _walk(tree, iid, p, stop_at_root=False)
    pts.reverse()
    feats.reverse()
    faces.reverse()
    verts.reverse()
    pts.append(target if target is not None else _target_3d(tree, iid, p))
    feats.append(("target",))
    P, F, S = _finish(pts, feats, faces)
    return GeodesicPath(P, _polyline_length(P), tuple(verts), F, S)


def construct_primitive_geodesic(
    tree: GeodesicIntervalTree, iid: int, p: complex, end: Node = "t", target: Optional[Point3] = None
) -> tuple[PrimitiveGeodesic, bool]:
    """Primitive piece ending at ``p``; the flag says whether it starts at s."""
    mesh = tree.mesh
    pts, feats, faces, _, root = _walk(tree, iid, p, stop_at_root=True)
    pts.reverse()
    feats.reverse()
    faces.reverse()
    pts.append(target if target is not None else _target_3d(tree, iid, p))
    feats.append(("target",) if end == "t" else ("vertex", end))
    P, F, S = _finish(pts, feats, faces)
    is_source = tree.parent[root] < 0
    if is_source:
        start: Node = "s"
        out_angle = None
    else:
        start = mesh.origin[mesh.prev(tree.edge[root])]
        out_angle = _angle_at(mesh, start, S[0], P[1])
    in_angle = None
    if end != "t":
        in_angle = incoming_angle(mesh, tree.edge[iid], tree.center(iid))
    prim = PrimitiveGeodesic(P, _polyline_length(P), start, end, out_angle, in_angle, F, S)
    return prim, is_source


def _angle_at(mesh: TriangleMesh, v: int, f: int, q: Point3) -> float:
    """Direction from vertex ``v`` toward ``q`` inside face ``f``, measured from e_v."""
    z = mesh.to_face_frame_3d(f, q) - mesh.to_face_frame_3d(f, mesh.positions[v])
    return direction_angle_at_vertex(mesh, v, f, z, eps=1e-6)


def connectable(beta: float, alpha: float, tau: float, eps: float = EPS_ANGLE) -> bool:
    """Whether incoming angle ``beta`` and outgoing angle ``alpha`` join into a geodesic."""
    off = circ_offset(alpha, beta, tau)
    return math.pi - eps <= off <= tau - math.pi + eps


def _connectable_records(tree: GeodesicIntervalTree, v: int, alpha: float):
    tau = tree.mesh.tau[v]
    return tree.registry.in_window(v, wrap(alpha + math.pi, tau), tau - 2.0 * math.pi, tau)


# --------------------------------------------------------------------------
# Enumeration
# --------------------------------------------------------------------------


def same_path(a: GeodesicPath, b: GeodesicPath, eps: float = EPS_PATH) -> bool:
    if len(a.points) != len(b.points):
        return False
    if abs(a.length - b.length) > eps * max(1.0, a.length):
        return False
    return all(max(abs(p[k] - q[k]) for k in range(3)) <= eps for p, q in zip(a.points, b.points))


def dedup_paths(paths, eps: float = EPS_PATH) -> list:
    """Remove paths that coincide pointwise within ``eps``; result sorted by (length, polyline)."""
    ordered = sorted(paths, key=lambda g: g.length)
    kept: list = []
    for g in ordered:
        dup = False
        for k in range(len(kept) - 1, -1, -1):
            if g.length - kept[k].length > eps * max(1.0, g.length):
                break
            if same_path(g, kept[k], eps):
                dup = True
                break
        if not dup:
            kept.append(g)
    kept.sort(key=lambda g: g.sort_key())
    return kept


def enum_complete(tree: GeodesicIntervalTree, t: SurfacePoint) -> list[GeodesicPath]:
    """All geodesics from s to ``t`` shorter than the radius (complete trees)."""
    if tree.mode is not Mode.COMPLETE:
        raise ValueError("enum_complete requires a complete-mode tree")
    target = tree.mesh.point_position(canonicalize(tree.mesh, t))
    paths = [construct_geodesic(tree, iid, p, target) for iid, p in _candidates(tree, t)]
    return dedup_paths([g for g in paths if g.length < tree.radius and not grazes_vertex(tree.mesh, g.points, g.features)])


def _concat(chain) -> GeodesicPath:
    """Join primitives (listed from s toward t) into one path."""
    pts, feats, faces, verts = [], [], [], []
    for prim in chain:
        if pts:
            verts.append(prim.start)
            pts.extend(prim.points[1:])
            feats.extend(prim.features[1:])
        else:
            pts.extend(prim.points)
            feats.extend(prim.features)
        faces.extend(prim.faces)
    feats[-1] = ("target",)
    feats[0] = ("source",)
    return GeodesicPath(tuple(pts), _polyline_length(pts), tuple(verts), tuple(feats), tuple(faces))


def enum_reduced(
    tree: GeodesicIntervalTree, t: SurfacePoint, depth_cap: int = DEFAULT_DEPTH_CAP
) -> list[GeodesicPath]:
    """Depth-first enumeration over primitive geodesics (reduced trees)."""
    if tree.mode is not Mode.REDUCED:
        raise ValueError("enum_reduced requires a reduced-mode tree")
    mesh = tree.mesh
    R = tree.radius
    target = mesh.point_position(canonicalize(mesh, t))
    found: list[GeodesicPath] = []
    for iid, p in _candidates(tree, t):
        d = abs(p - tree.center(iid))
        prim, _ = construct_primitive_geodesic(tree, iid, p, "t", target)
        if grazes_vertex(mesh, prim.points, prim.features):
            continue
        stack = [(prim, None, d, 0)]
        while stack:
            prim, suffix, d, level = stack.pop()
            if level > depth_cap:
                raise QueryCapExceeded("recursion depth cap exceeded", dedup_paths(found))
            if prim.is_source:
                chain = [prim]
                node = suffix
                while node is not None:
                    chain.append(node[0])
                    node = node[1]
                g = _concat(chain)
                if g.length < R:
                    found.append(g)
                continue
            v = prim.start
            for jid, arrival, beta in _connectable_records(tree, v, prim.out_angle):
                if d + arrival < R:
                    sub = _primitive_to_vertex(tree, jid, v, beta)
                    if grazes_vertex(mesh, sub.points, sub.features):
                        continue
                    stack.append((sub, (prim, suffix), d + abs(tree.center(jid)), level + 1))
    return dedup_paths(found)


def _primitive_to_vertex(tree: GeodesicIntervalTree, jid: int, v: int, beta: float) -> PrimitiveGeodesic:
    prim, _ = construct_primitive_geodesic(tree, jid, 0j, v, tree.mesh.positions[v])
    return PrimitiveGeodesic(prim.points, prim.length, prim.start, prim.end, prim.out_angle, beta, prim.features, prim.faces)


def enumerate_geodesics(tree: GeodesicIntervalTree, t: SurfacePoint) -> list[GeodesicPath]:
    """Mode-appropriate enumeration."""
    if tree.mode is Mode.COMPLETE:
        return enum_complete(tree, t)
    return enum_reduced(tree, t)


# --------------------------------------------------------------------------
# Geodesic graph
# --------------------------------------------------------------------------


def _same_primitive(a: PrimitiveGeodesic, b: PrimitiveGeodesic, eps: float = EPS_PATH) -> bool:
    if a.start != b.start or a.end != b.end or len(a.points) != len(b.points):
        return False
    return all(max(abs(p[k] - q[k]) for k in range(3)) <= eps for p, q in zip(a.points, b.points))


def build_geodesic_graph(tree: GeodesicIntervalTree, t: SurfacePoint) -> GeodesicGraph:
    """Backward Dijkstra over primitive geodesics from ``t``."""
    if tree.mode is not Mode.REDUCED:
        raise ValueError("graph requires reduced mode")
    mesh = tree.mesh
    R = tree.radius
    t = canonicalize(mesh, t)
    target = mesh.point_position(t)
    graph = GeodesicGraph(tree.source, t, R)
    heap: list = []
    seq = 0
    for iid, p in _candidates(tree, t):
        heap.append((abs(p - tree.center(iid)), seq, iid, True, p, None))
        seq += 1
    heapq.heapify(heap)
    visited: set[int] = set()
    edges: list[PrimitiveGeodesic] = []
    while heap:
        d, _, iid, is_target, p, beta = heapq.heappop(heap)
        if not is_target:
            if iid in visited:
                continue
            visited.add(iid)
        if is_target:
            prim, is_source = construct_primitive_geodesic(tree, iid, p, "t", target)
        else:
            v_end = mesh.origin[tree.edge[iid]]
            prim = _primitive_to_vertex(tree, iid, v_end, beta)
            is_source = prim.is_source
        if grazes_vertex(mesh, prim.points, prim.features):
            continue
        edges.append(prim)
        if is_source:
            continue
        v = prim.start
        for jid, arrival, ang in _connectable_records(tree, v, prim.out_angle):
            if jid not in visited and d + arrival < R:
                heapq.heappush(heap, (d + abs(tree.center(jid)), seq, jid, False, 0j, ang))
                seq += 1
    for e in edges:
        if not any(_same_primitive(e, k) for k in graph.edges):
            graph.edges.append(e)
    verts = sorted({n for e in graph.edges for n in (e.start, e.end) if isinstance(n, int)})
    graph.nodes = ["s", "t", *verts]
    graph.tau = {v: mesh.tau[v] for v in verts}
    return graph


def paths_of_graph(graph: GeodesicGraph, radius: Optional[float] = None, cap: int = DEFAULT_PATH_CAP) -> list[GeodesicPath]:
    """Every s-to-t path in the graph that is a geodesic shorter than the radius."""
    R = graph.radius if radius is None else radius
    out_edges: dict[Node, list[PrimitiveGeodesic]] = {}
    for e in graph.edges:
        out_edges.setdefault(e.start, []).append(e)
    found: list[GeodesicPath] = []
    stack = [(e, (e,), e.length) for e in out_edges.get("s", ())]
    while stack:
        e, chain, length = stack.pop()
        if length >= R:
            continue
        if e.end == "t":
            found.append(_concat(chain))
            if len(found) > cap:
                raise QueryCapExceeded("path count cap exceeded", dedup_paths(found))
            continue
        v = e.end
        tau = graph.tau[v]
        for nxt in out_edges.get(v, ()):
            if connectable(e.in_angle, nxt.out_angle, tau):
                stack.append((nxt, chain + (nxt,), length + nxt.length))
    return dedup_paths(found)


# --------------------------------------------------------------------------
# Validity checks
# --------------------------------------------------------------------------


@dataclass
class PathDefects:
    max_crossing_deviation: float = 0.0
    min_side_angle: float = math.inf
    non_hyperbolic_vertices: list = field(default_factory=list)
    length_ok: bool = True

    def ok(self, tol: float = 1e-6) -> bool:
        return (
            self.max_crossing_deviation < tol
            and self.min_side_angle >= math.pi - tol
            and not self.non_hyperbolic_vertices
            and self.length_ok
        )


def geodesic_defects(mesh: TriangleMesh, path: GeodesicPath, radius: float) -> PathDefects:
    """Measure how far a path is from satisfying the geodesic conditions."""
    out = PathDefects(length_ok=path.length < radius and abs(path.length - _polyline_length(path.points)) <= 1e-9 * max(1.0, path.length))
    P, F = path.points, path.features
    for j in range(1, len(P) - 1):
        tag = F[j]
        if tag[0] == "edge":
            ends = [v for v in tag[1:] if _dist3(P[j], mesh.positions[v]) <= EXTENT_REL_TOL * mesh.mean_edge_length]
            if ends:
                # crossing through an endpoint: judge it as a vertex passage
                v = ends[0]
                if mesh.boundary_vertex[v] or mesh.vclass[v] is not VertexClass.EUCLIDEAN:
                    out.non_hyperbolic_vertices.append(v)
                    continue
                tau = mesh.tau[v]
                beta = _angle_at(mesh, v, path.faces[j - 1], P[j - 1])
                alpha = _angle_at(mesh, v, path.faces[j], P[j + 1])
                off = circ_offset(alpha, beta, tau)
                out.min_side_angle = min(out.min_side_angle, off, tau - off)
                continue
            a, b = mesh.positions[tag[1]], mesh.positions[tag[2]]
            e = tuple(b[k] - a[k] for k in range(3))
            d_in = tuple(P[j][k] - P[j - 1][k] for k in range(3))
            d_out = tuple(P[j + 1][k] - P[j][k] for k in range(3))
            dev = abs(vector_angle(d_in, e) - vector_angle(d_out, e))
            out.max_crossing_deviation = max(out.max_crossing_deviation, dev)
        elif tag[0] == "vertex":
            v = tag[1]
            if not mesh.is_pseudo_source(v):
                out.non_hyperbolic_vertices.append(v)
                continue
            tau = mesh.tau[v]
            beta = _angle_at(mesh, v, path.faces[j - 1], P[j - 1])
            alpha = _angle_at(mesh, v, path.faces[j], P[j + 1])
            off = circ_offset(alpha, beta, tau)
            out.min_side_angle = min(out.min_side_angle, off, tau - off)
    return out
