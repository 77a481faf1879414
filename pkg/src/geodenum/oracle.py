"""Brute-force geodesic enumeration by unfolding face strips.

Shares no geometry code with the interval engine: faces are laid out in the
plane from edge lengths alone, visibility is tracked as a cone of direction
vectors, and vertex angles come from a separate fan walk.  Intended for small
meshes only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .mesh import AtVertex, InFace, OnEdge, SurfacePoint, TriangleMesh, canonicalize
from .query import GeodesicPath, dedup_paths

MAX_FACES = 200
DEFAULT_STATE_CAP = 2_000_000
TOL = 1e-9


class OracleLimit(RuntimeError):
    pass


def _sub3(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _len3(a):
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def _angle3(u, w):
    cx = u[1] * w[2] - u[2] * w[1]
    cy = u[2] * w[0] - u[0] * w[2]
    cz = u[0] * w[1] - u[1] * w[0]
    return math.atan2(math.sqrt(cx * cx + cy * cy + cz * cz), u[0] * w[0] + u[1] * w[1] + u[2] * w[2])


def _cross(u, w):
    return u[0] * w[1] - u[1] * w[0]


def _lerp3(a, b, s):
    return (a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]), a[2] + s * (b[2] - a[2]))


@dataclass
class _Prim:
    points: tuple
    length: float
    start: object
    end: object
    out_angle: Optional[float]
    in_angle: Optional[float]
    tags: tuple = ()
    faces: tuple = ()


class _Surface:
    def __init__(self, positions, faces):
        self.X = [tuple(map(float, p)) for p in positions]
        self.F = [tuple(f) for f in faces]
        self.dir_face = {}
        for fi, (a, b, c) in enumerate(self.F):
            for u, v in ((a, b), (b, c), (c, a)):
                self.dir_face[(u, v)] = fi
        n = len(self.X)
        self.incident = [[] for _ in range(n)]
        for fi, f in enumerate(self.F):
            for v in f:
                self.incident[v].append(fi)
        self.closed = [all((w, v) in self.dir_face for fi in self.incident[v] for w in self.F[fi] if w != v) for v in range(n)]
        self.fan_start = {}
        self.total = [0.0] * n
        for v in range(n):
            self._walk_fan(v)
        self.flat = [self.closed[v] and abs(self.total[v] - 2 * math.pi) <= 1e-9 for v in range(n)]

    def dist(self, a, b):
        return _len3(_sub3(self.X[a], self.X[b]))

    def rotated(self, f, v):
        """Face ``f`` as (v, a, b) in counterclockwise order."""
        a, b, c = self.F[f]
        if v == a:
            return a, b, c
        if v == b:
            return b, c, a
        return c, a, b

    def corner(self, f, v):
        _, a, b = self.rotated(f, v)
        return _angle3(_sub3(self.X[a], self.X[v]), _sub3(self.X[b], self.X[v]))

    def _walk_fan(self, v):
        faces = self.incident[v]
        if not faces:
            return
        start = min(faces)
        if not self.closed[v]:
            # begin at the face whose (v, a) edge has no partner
            for f in faces:
                _, a, _ = self.rotated(f, v)
                if (a, v) not in self.dir_face:
                    start = f
                    break
        off = 0.0
        f = start
        for _ in range(len(faces)):
            self.fan_start[(v, f)] = off
            off += self.corner(f, v)
            _, _, b = self.rotated(f, v)
            nxt = self.dir_face.get((v, b))
            if nxt is None or nxt == start:
                break
            f = nxt
        self.total[v] = off

    def direction_angle(self, v, f, q):
        """Angle of the direction from ``v`` toward 3D point ``q`` in face ``f``."""
        _, a, _ = self.rotated(f, v)
        return self.fan_start[(v, f)] + _angle3(_sub3(self.X[a], self.X[v]), _sub3(q, self.X[v]))


def _layout(surface: _Surface, f: int):
    a, b, c = surface.F[f]
    lab, lac, lbc = surface.dist(a, b), surface.dist(a, c), surface.dist(b, c)
    x = (lab * lab + lac * lac - lbc * lbc) / (2 * lab)
    y = math.sqrt(max(lac * lac - x * x, 0.0))
    return {a: (0.0, 0.0), b: (lab, 0.0), c: (x, y)}


def _place_across(surface: _Surface, P2, Q2, p, q, d):
    """2D position of ``d`` right of the directed segment P -> Q."""
    ex, ey = Q2[0] - P2[0], Q2[1] - P2[1]
    L = math.hypot(ex, ey)
    lp, lq = surface.dist(p, d), surface.dist(q, d)
    x = (L * L + lp * lp - lq * lq) / (2 * L)
    h = math.sqrt(max(lp * lp - x * x, 0.0))
    ux, uy = ex / L, ey / L
    return (P2[0] + x * ux + h * uy, P2[1] + x * uy - h * ux)


def _in_cone(u, w, d):
    nd = math.hypot(*d)
    return _cross(u, d) >= -TOL * math.hypot(*u) * nd and _cross(d, w) >= -TOL * math.hypot(*w) * nd


def _seg_dist(S, A, B):
    ax, ay = A[0] - S[0], A[1] - S[1]
    bx, by = B[0] - S[0], B[1] - S[1]
    ex, ey = bx - ax, by - ay
    ee = ex * ex + ey * ey
    s = 0.0 if ee == 0 else min(max(-(ax * ex + ay * ey) / ee, 0.0), 1.0)
    return math.hypot(ax + s * ex, ay + s * ey)


def _primitives(surface: _Surface, S3, start_faces, S2_of, exclude_vertex, targets, R, cap, reverse=False):
    """Straight unfolded segments from the start point to target points.

    ``targets`` maps a key to ``(3D point, {face: barycentric-or-None})``;
    vertex targets are given with an integer key.  Returns a list of
    (key, 3D polyline, length, last face, first face).
    """
    found = []
    states = 0
    for f0 in (reversed(start_faces) if reverse else start_faces):
        pos = _layout(surface, f0)
        S2 = S2_of(f0, pos)
        # targets inside the start face
        for key, (T3, faces) in targets.items():
            if f0 in faces:
                T2 = _to2d(surface, f0, pos, T3, faces[f0])
                dist = math.hypot(T2[0] - S2[0], T2[1] - S2[1])
                if 0.0 < dist < R:
                    found.append((key, (S3, T3), dist, f0, f0, (), (f0,)))
        a, b, c = surface.F[f0]
        sides = ((a, b), (b, c), (c, a))
        for p, q in (sides[::-1] if reverse else sides):
            if exclude_vertex is not None and exclude_vertex in (p, q):
                continue
            u = (pos[p][0] - S2[0], pos[p][1] - S2[1])
            w = (pos[q][0] - S2[0], pos[q][1] - S2[1])
            if _cross(u, w) <= TOL * math.hypot(*u) * math.hypot(*w):
                continue  # start point lies on this edge
            stack = [(p, q, pos[p], pos[q], u, w, f0, ())]
            while stack:
                states += 1
                if states > cap:
                    raise OracleLimit("oracle state cap exceeded")
                p, q, P2, Q2, u, w, fprev, strip = stack.pop()
                if _seg_dist(S2, P2, Q2) >= R:
                    continue
                f = surface.dir_face.get((q, p))
                if f is None:
                    continue
                strip2 = strip + ((p, q, P2, Q2),)
                d = next(x for x in surface.F[f] if x != p and x != q)
                D2 = _place_across(surface, P2, Q2, p, q, d)
                pos_f = {p: P2, q: Q2, d: D2}
                for key, (T3, faces) in targets.items():
                    # vertices on the crossed edge were already seen before it
                    if f not in faces or (faces[f] is None and T3 not in (surface.X[d],)):
                        continue
                    if faces[f] is not None and faces[f][surface.F[f].index(d)] == 0.0:
                        continue  # on the crossed edge
                    T2 = _to2d(surface, f, pos_f, T3, faces[f])
                    dv = (T2[0] - S2[0], T2[1] - S2[1])
                    dist = math.hypot(*dv)
                    if 0.0 < dist < R and _in_cone(u, w, dv):
                        poly = _verify(surface, S2, T2, strip2)
                        if poly is not None:
                            tags = tuple(("edge", min(x, y), max(x, y)) for x, y, _, _ in strip2)
                            fs = (f0,) + tuple(surface.dir_face[(y, x)] for x, y, _, _ in strip2)
                            found.append((key, (S3, *poly, T3), dist, f, f0, tags, fs))
                # children: edges (p, d) and (d, q) as directed in face f
                kids = ((p, d, P2, D2), (d, q, D2, Q2))
                for x, y, X2, Y2 in (kids[::-1] if reverse else kids):
                    cu = (X2[0] - S2[0], X2[1] - S2[1])
                    cw = (Y2[0] - S2[0], Y2[1] - S2[1])
                    nu = cu if _cross(u, cu) > 0 else u
                    nw = cw if _cross(cw, w) > 0 else w
                    if _cross(nu, nw) < -TOL * math.hypot(*nu) * math.hypot(*nw):
                        continue
                    if _cross(cu, cw) <= 0:
                        continue
                    stack.append((x, y, X2, Y2, nu, nw, f, strip2))
    return found


def _to2d(surface, f, pos, T3, bary):
    if bary is None:
        # a vertex of f
        for v in surface.F[f]:
            if surface.X[v] == T3:
                return pos[v]
    a, b, c = surface.F[f]
    return (
        bary[0] * pos[a][0] + bary[1] * pos[b][0] + bary[2] * pos[c][0],
        bary[0] * pos[a][1] + bary[1] * pos[b][1] + bary[2] * pos[c][1],
    )


def _verify(surface, S2, T2, strip):
    """3D crossing points of segment S-T with each strip edge, or None."""
    pts = []
    last = -math.inf
    dx, dy = T2[0] - S2[0], T2[1] - S2[1]
    for p, q, P2, Q2 in strip:
        ex, ey = Q2[0] - P2[0], Q2[1] - P2[1]
        den = _cross((dx, dy), (ex, ey))
        if abs(den) < 1e-15:
            return None
        rx, ry = P2[0] - S2[0], P2[1] - S2[1]
        t = _cross((rx, ry), (ex, ey)) / den
        s = _cross((rx, ry), (dx, dy)) / den
        if not (-TOL <= s <= 1 + TOL and -TOL <= t <= 1 + TOL):
            return None
        # the segment must meet the strip edges in order
        if t < last - TOL:
            return None
        last = t
        # passing straight through a curved vertex is not a geodesic
        if (s <= TOL and not surface.flat[p]) or (s >= 1 - TOL and not surface.flat[q]):
            return None
        pts.append(_lerp3(surface.X[p], surface.X[q], min(max(s, 0.0), 1.0)))
    return pts


def _bary_map(mesh: TriangleMesh, surface: _Surface, p: SurfacePoint):
    """3D point and {face: barycentric} for a canonical surface point."""
    if isinstance(p, AtVertex):
        return surface.X[p.vertex], {f: None for f in surface.incident[p.vertex]}
    if isinstance(p, InFace):
        a, b, c = surface.F[p.face]
        X = surface.X
        pt = tuple(p.bary[0] * X[a][k] + p.bary[1] * X[b][k] + p.bary[2] * X[c][k] for k in range(3))
        return pt, {p.face: tuple(p.bary)}
    a, b = mesh.edge_vertices(p.edge)
    pt = _lerp3(surface.X[a], surface.X[b], p.u)
    out = {}
    for f in set(surface.incident[a]) & set(surface.incident[b]):
        out[f] = tuple(1.0 - p.u if v == a else (p.u if v == b else 0.0) for v in surface.F[f])
    return pt, out


def exhaustive_enumerate(
    mesh: TriangleMesh,
    source: SurfacePoint,
    target: SurfacePoint,
    radius: float,
    state_cap: int = DEFAULT_STATE_CAP,
    angle_tol: float = 1e-7,
    reverse_order: bool = False,
) -> list[GeodesicPath]:
    """Every geodesic from ``source`` to ``target`` shorter than ``radius``.

    Raises
    ------
    OracleLimit
        If the mesh has more than 200 faces or the search exceeds
        ``state_cap`` strip states.

    ``reverse_order`` flips every traversal order in the search; the
    result must not depend on it.
    """
    if mesh.n_faces > MAX_FACES:
        raise OracleLimit(f"oracle limited to {MAX_FACES} faces")
    surface = _Surface(mesh.positions, mesh.faces)
    s = canonicalize(mesh, source)
    t = canonicalize(mesh, target)
    S3, s_faces = _bary_map(mesh, surface, s)
    T3, t_faces = _bary_map(mesh, surface, t)
    if _len3(_sub3(S3, T3)) <= 1e-12:
        return []
    hyper = [
        v
        for v in range(len(surface.X))
        if surface.closed[v] and surface.incident[v] and surface.total[v] > 2 * math.pi + 1e-9
    ]
    targets = {}
    if not (isinstance(t, AtVertex) and t.vertex in hyper):
        targets["t"] = (T3, t_faces)
    for v in hyper:
        targets[v] = (surface.X[v], {f: None for f in surface.incident[v]})

    def prims_from(node):
        if node == "s":
            if isinstance(s, AtVertex):
                v = s.vertex
                S2_of = lambda f, pos: pos[v]  # noqa: E731
                return v, _primitives(surface, S3, surface.incident[v], S2_of, v, targets, radius, state_cap, reverse_order)
            S2_of = lambda f, pos: _to2d(surface, f, pos, S3, s_faces[f])  # noqa: E731
            return None, _primitives(surface, S3, list(s_faces), S2_of, None, targets, radius, state_cap, reverse_order)
        S2_of = lambda f, pos: pos[node]  # noqa: E731
        return node, _primitives(surface, surface.X[node], surface.incident[node], S2_of, node, targets, radius, state_cap, reverse_order)

    cache: dict = {}

    def prims(node):
        if node not in cache:
            v, raw = prims_from(node)
            out = []
            for key, poly, length, f_last, f_first, tags, fs in raw:
                out_angle = None if v is None else surface.direction_angle(v, f_first, poly[1])
                in_angle = None if key == "t" else surface.direction_angle(key, f_last, poly[-2])
                out.append(_Prim(poly, length, node, key, out_angle, in_angle, tags, fs))
            cache[node] = out
        return cache[node]

    t_node = t.vertex if isinstance(t, AtVertex) and t.vertex in hyper else "t"
    found = []
    stack = [(p, (p,), p.length) for p in prims("s")]
    while stack:
        prim, chain, length = stack.pop()
        if length >= radius:
            continue
        if prim.end == t_node:
            found.append(_join(chain))
            if len(found) > state_cap:
                raise OracleLimit("oracle path cap exceeded")
        if prim.end == "t":
            continue
        v = prim.end
        tot = surface.total[v]
        for nxt in prims(v):
            off = (prim.in_angle - nxt.out_angle) % tot
            if off >= math.pi - angle_tol and tot - off >= math.pi - angle_tol:
                stack.append((nxt, chain + (nxt,), length + nxt.length))
    return dedup_paths(found)


def _join(chain) -> GeodesicPath:
    pts, feats, faces, verts = [], [], [], []
    for k, p in enumerate(chain):
        head = ("source",) if k == 0 else ("vertex", p.start)
        tail = ("target",) if k == len(chain) - 1 else ("vertex", p.end)
        if k:
            verts.append(p.start)
        for j, (q, tag) in enumerate(zip(p.points, (head, *p.tags, tail))):
            if j == 0:
                if not pts:
                    pts.append(q)
                    feats.append(tag)
                continue
            if _len3(_sub3(q, pts[-1])) <= 1e-12:
                if tag[0] != "edge":
                    feats[-1] = tag
                continue
            faces.append(p.faces[j - 1])
            pts.append(q)
            feats.append(tag)
    length = sum(_len3(_sub3(pts[i + 1], pts[i])) for i in range(len(pts) - 1))
    return GeodesicPath(tuple(pts), length, tuple(verts), tuple(feats), tuple(faces))
