"""Half-edge triangle meshes with intrinsic angle data.

Half-edge ``3*f + i`` of face ``f = (v0, v1, v2)`` runs from ``v_i`` to
``v_{i+1}``, so the face lies on its left.  Every half-edge carries a planar
frame: origin at its start vertex, +x along the half-edge, +y into its face.
Planar points are Python complex numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Union

EPS_ANGLE = 1e-9
EPS_SNAP = 1e-9
TWO_PI = 2.0 * math.pi


class MeshError(ValueError):
    """Raised for malformed or unsupported mesh input."""


class VertexClass(Enum):
    SPHERICAL = "spherical"
    EUCLIDEAN = "euclidean"
    HYPERBOLIC = "hyperbolic"


def classify(tau: float, eps: float = EPS_ANGLE) -> VertexClass:
    if tau < TWO_PI - eps:
        return VertexClass.SPHERICAL
    if tau > TWO_PI + eps:
        return VertexClass.HYPERBOLIC
    return VertexClass.EUCLIDEAN


# --------------------------------------------------------------------------
# Surface points
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AtVertex:
    vertex: int


@dataclass(frozen=True)
class OnEdge:
    """Point on edge ``edge`` at parameter ``u`` along its canonical half-edge."""

    edge: int
    u: float


@dataclass(frozen=True)
class InFace:
    """Point in ``face`` with barycentric weights of the face's three vertices."""

    face: int
    bary: tuple[float, float, float]


SurfacePoint = Union[AtVertex, OnEdge, InFace]


# --------------------------------------------------------------------------
# Small vector helpers (tuples keep the mesh free of numpy)
# --------------------------------------------------------------------------


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _cross(a, b):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def _norm(a):
    return math.sqrt(_dot(a, a))


def vector_angle(u, w) -> float:
    """Angle between two 3D vectors via atan2 of cross and dot magnitudes."""
    return math.atan2(_norm(_cross(u, w)), _dot(u, w))


class TriangleMesh:
    """Immutable, validated half-edge mesh.

    Parameters
    ----------
    positions : sequence of 3-sequences
        Vertex coordinates.
    faces : sequence of 3-sequences
        Zero-based vertex indices, counterclockwise.
    eps_angle : float
        Tolerance used for vertex classification.

    Raises
    ------
    MeshError
        On non-triangular faces, bad indices, non-manifold edges,
        inconsistent orientation, degenerate faces or isolated vertices.
    """

    def __init__(self, positions: Sequence[Sequence[float]], faces: Sequence[Sequence[int]], eps_angle: float = EPS_ANGLE):
        self.eps_angle = eps_angle
        self.positions = [tuple(float(c) for c in p) for p in positions]
        for p in self.positions:
            if len(p) != 3:
                raise MeshError("vertex positions must have 3 coordinates")
        nv = len(self.positions)
        self.faces: list[tuple[int, int, int]] = []
        for f in faces:
            if len(f) != 3:
                raise MeshError("non-triangular face")
            a, b, c = (int(i) for i in f)
            for i in (a, b, c):
                if not 0 <= i < nv:
                    raise MeshError(f"vertex index {i} out of range")
            if len({a, b, c}) < 3:
                raise MeshError("degenerate face (repeated vertex)")
            self.faces.append((a, b, c))
        if not self.faces:
            raise MeshError("mesh has no faces")
        self._build_connectivity()
        self._build_geometry()
        self._build_fans()

    # -- construction -------------------------------------------------

    def _build_connectivity(self) -> None:
        nf = len(self.faces)
        nh = 3 * nf
        self.origin = [0] * nh
        for f, tri in enumerate(self.faces):
            for i in range(3):
                self.origin[3 * f + i] = tri[i]
        directed: dict[tuple[int, int], int] = {}
        undirected: dict[tuple[int, int], int] = {}
        for h in range(nh):
            a, b = self.origin[h], self.dest(h)
            key = (a, b) if a < b else (b, a)
            undirected[key] = undirected.get(key, 0) + 1
            if undirected[key] > 2:
                raise MeshError(f"non-manifold edge {key}")
            if (a, b) in directed:
                raise MeshError(f"inconsistent orientation at edge {key}")
            directed[(a, b)] = h
        self.twin = [-1] * nh
        for (a, b), h in directed.items():
            self.twin[h] = directed.get((b, a), -1)
        self.edge_he: list[int] = []
        self.edge_of = [-1] * nh
        for h in range(nh):
            t = self.twin[h]
            if t == -1 or h < t:
                e = len(self.edge_he)
                self.edge_he.append(h)
                self.edge_of[h] = e
                if t != -1:
                    self.edge_of[t] = e
        self.boundary_halfedges = [h for h in range(nh) if self.twin[h] == -1]
        self.boundary_vertex = [False] * len(self.positions)
        for h in self.boundary_halfedges:
            self.boundary_vertex[self.origin[h]] = True
            self.boundary_vertex[self.dest(h)] = True

    def _build_geometry(self) -> None:
        X = self.positions
        nh = 3 * len(self.faces)
        self.length = [0.0] * nh
        self.corner = [0.0] * nh
        self.fpos: list[tuple[complex, complex, complex]] = []
        self.frame3d = []
        for f, (a, b, c) in enumerate(self.faces):
            ab, ac = _sub(X[b], X[a]), _sub(X[c], X[a])
            lab = _norm(ab)
            n = _cross(ab, ac)
            area2 = _norm(n)
            if lab == 0.0 or _norm(ac) == 0.0 or _norm(_sub(X[c], X[b])) == 0.0:
                raise MeshError(f"zero-length edge in face {f}")
            if area2 <= 1e-14 * lab * _norm(ac):
                raise MeshError(f"zero-area face {f}")
            e1 = tuple(x / lab for x in ab)
            # y axis: component of ac orthogonal to e1
            px = _dot(ac, e1)
            r = tuple(ac[k] - px * e1[k] for k in range(3))
            py = _norm(r)
            e2 = tuple(x / py for x in r)
            self.fpos.append((0j, complex(lab, 0.0), complex(px, py)))
            self.frame3d.append((X[a], e1, e2))
            for i in range(3):
                h = 3 * f + i
                o = self.origin[h]
                d = self.dest(h)
                p = self.origin[self.prev(h)]
                u, w = _sub(X[d], X[o]), _sub(X[p], X[o])
                self.length[h] = _norm(u)
                ang = vector_angle(u, w)
                if not 0.0 < ang < math.pi:
                    raise MeshError(f"degenerate corner in face {f}")
                self.corner[h] = ang
        # per half-edge frame data in face coordinates
        self.he_org = [0j] * nh
        self.he_dir = [0j] * nh
        for h in range(nh):
            f, i = divmod(h, 3)
            P = self.fpos[f]
            o, d = P[i], P[(i + 1) % 3]
            self.he_org[h] = o
            self.he_dir[h] = (d - o) / abs(d - o)
        # opposite vertex of each half-edge, in the half-edge frame
        self.apex2d = [self.face_to_he(h, self.fpos[h // 3][(h % 3 + 2) % 3]) for h in range(nh)]
        # frame changes from h to next(h) / prev(h): z' = z * rot + trans
        self.to_next = [self._frame_change(h, self.next(h)) for h in range(nh)]
        self.to_prev = [self._frame_change(h, self.prev(h)) for h in range(nh)]
        self.mean_edge_length = sum(self.length[h] for h in self.edge_he) / len(self.edge_he)

    def _frame_change(self, a: int, b: int) -> tuple[complex, complex]:
        rot = self.he_dir[a] * self.he_dir[b].conjugate()
        trans = (self.he_org[a] - self.he_org[b]) * self.he_dir[b].conjugate()
        return rot, trans

    def _build_fans(self) -> None:
        nv = len(self.positions)
        out: list[list[int]] = [[] for _ in range(nv)]
        for h in range(3 * len(self.faces)):
            out[self.origin[h]].append(h)
        self.tau = [0.0] * nv
        self.vclass: list[VertexClass] = []
        self.fan: list[list[int]] = [[] for _ in range(nv)]
        self.fan_offset = [0.0] * (3 * len(self.faces))
        for v in range(nv):
            if not out[v]:
                raise MeshError(f"vertex {v} is not referenced by any face")
            if self.boundary_vertex[v]:
                starts = [h for h in out[v] if self.twin[h] == -1]
                start = min(starts)
            else:
                start = min(out[v])
            fan = [start]
            h = start
            while True:
                h = self.twin[self.prev(h)]
                if h == -1 or h == start:
                    break
                fan.append(h)
            if len(fan) != len(out[v]):
                raise MeshError(f"non-manifold vertex {v}")
            acc = 0.0
            for h in fan:
                self.fan_offset[h] = acc
                acc += self.corner[h]
            self.fan[v] = fan
            self.tau[v] = acc
            self.vclass.append(classify(acc, self.eps_angle))

    # -- combinatorics ------------------------------------------------

    @staticmethod
    def next(h: int) -> int:
        return h - 2 if h % 3 == 2 else h + 1

    @staticmethod
    def prev(h: int) -> int:
        return h + 2 if h % 3 == 0 else h - 1

    @staticmethod
    def face_of(h: int) -> int:
        return h // 3

    def dest(self, h: int) -> int:
        return self.origin[self.next(h)]

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_edges(self) -> int:
        return len(self.edge_he)

    @property
    def n_halfedges(self) -> int:
        return 3 * len(self.faces)

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    def e_v(self, v: int) -> int:
        """Reference half-edge from which angles around ``v`` are measured."""
        return self.fan[v][0]

    def is_pseudo_source(self, v: int) -> bool:
        """Interior hyperbolic vertices are the only ones geodesics may pass."""
        return self.vclass[v] is VertexClass.HYPERBOLIC and not self.boundary_vertex[v]

    def edge_vertices(self, e: int) -> tuple[int, int]:
        h = self.edge_he[e]
        return self.origin[h], self.dest(h)

    def halfedge_in_face(self, f: int, v: int) -> int:
        """The half-edge of face ``f`` leaving vertex ``v``."""
        for i in range(3):
            if self.faces[f][i] == v:
                return 3 * f + i
        raise MeshError(f"vertex {v} is not incident to face {f}")

    # -- frames -------------------------------------------------------

    def face_to_he(self, h: int, z: complex) -> complex:
        return (z - self.he_org[h]) * self.he_dir[h].conjugate()

    def he_to_face(self, h: int, z: complex) -> complex:
        return z * self.he_dir[h] + self.he_org[h]

    def face_to_3d(self, f: int, z: complex) -> tuple[float, float, float]:
        o, e1, e2 = self.frame3d[f]
        return tuple(o[k] + z.real * e1[k] + z.imag * e2[k] for k in range(3))

    def he_to_3d(self, h: int, z: complex) -> tuple[float, float, float]:
        return self.face_to_3d(h // 3, self.he_to_face(h, z))

    def point_on_halfedge_3d(self, h: int, x: float) -> tuple[float, float, float]:
        a = self.positions[self.origin[h]]
        b = self.positions[self.dest(h)]
        s = x / self.length[h]
        return tuple(a[k] + s * (b[k] - a[k]) for k in range(3))

    def to_face_frame_3d(self, f: int, p) -> complex:
        """Planar coordinates of a 3D point in the plane of face ``f``."""
        o, e1, e2 = self.frame3d[f]
        d = _sub(p, o)
        return complex(_dot(d, e1), _dot(d, e2))

    # -- surface points -----------------------------------------------

    def point_position(self, p: SurfacePoint) -> tuple[float, float, float]:
        if isinstance(p, AtVertex):
            return self.positions[p.vertex]
        if isinstance(p, OnEdge):
            h = self.edge_he[p.edge]
            return self.point_on_halfedge_3d(h, p.u * self.length[h])
        a, b, c = (self.positions[i] for i in self.faces[p.face])
        w = p.bary
        return tuple(w[0] * a[k] + w[1] * b[k] + w[2] * c[k] for k in range(3))

    def point_in_face(self, p: SurfacePoint, f: int) -> complex:
        """Face-frame coordinates of a point lying in the closure of ``f``."""
        P = self.fpos[f]
        if isinstance(p, InFace):
            if p.face != f:
                raise MeshError("point is not in this face")
            w = p.bary
            return w[0] * P[0] + w[1] * P[1] + w[2] * P[2]
        if isinstance(p, AtVertex):
            return P[self.faces[f].index(p.vertex)]
        h = self.edge_he[p.edge]
        if h // 3 != f:
            h = self.twin[h]
            if h == -1 or h // 3 != f:
                raise MeshError("point is not in this face")
            u = 1.0 - p.u
        else:
            u = p.u
        i = h % 3
        return P[i] + u * (P[(i + 1) % 3] - P[i])

    def faces_of_point(self, p: SurfacePoint) -> list[int]:
        if isinstance(p, InFace):
            return [p.face]
        if isinstance(p, OnEdge):
            h = self.edge_he[p.edge]
            t = self.twin[h]
            return [h // 3] if t == -1 else [h // 3, t // 3]
        return [h // 3 for h in self.fan[p.vertex]]


def vertex_angle_data(mesh: TriangleMesh, v: int) -> tuple[float, VertexClass]:
    if not 0 <= v < mesh.n_vertices:
        raise MeshError(f"vertex {v} out of range")
    return mesh.tau[v], mesh.vclass[v]


def canonicalize(mesh: TriangleMesh, p: SurfacePoint, eps: float = EPS_SNAP) -> SurfacePoint:
    """Snap a raw surface point to the lowest-dimensional feature it lies on."""
    if isinstance(p, AtVertex):
        if not 0 <= p.vertex < mesh.n_vertices:
            raise MeshError(f"vertex {p.vertex} out of range")
        return p
    if isinstance(p, OnEdge):
        if not 0 <= p.edge < mesh.n_edges:
            raise MeshError(f"edge {p.edge} out of range")
        u = float(p.u)
        if u < -eps or u > 1.0 + eps:
            raise MeshError(f"edge parameter {u} out of [0, 1]")
        h = mesh.edge_he[p.edge]
        if u <= eps:
            return AtVertex(mesh.origin[h])
        if u >= 1.0 - eps:
            return AtVertex(mesh.dest(h))
        return OnEdge(p.edge, u)
    if isinstance(p, InFace):
        if not 0 <= p.face < mesh.n_faces:
            raise MeshError(f"face {p.face} out of range")
        b = [float(x) for x in p.bary]
        if len(b) != 3:
            raise MeshError("barycentric coordinates need 3 values")
        if any(x < -eps or x > 1.0 + eps for x in b) or abs(sum(b) - 1.0) > eps:
            raise MeshError(f"barycentric coordinates {b} out of bounds")
        b = [max(x, 0.0) for x in b]
        zero = [x <= eps for x in b]
        f = p.face
        if sum(zero) >= 2:
            i = zero.index(False)
            return AtVertex(mesh.faces[f][i])
        if sum(zero) == 1:
            i = zero.index(True)
            h = 3 * f + (i + 1) % 3
            j, k = (i + 1) % 3, (i + 2) % 3
            u = b[k] / (b[j] + b[k])
            e = mesh.edge_of[h]
            if mesh.edge_he[e] != h:
                u = 1.0 - u
            return OnEdge(e, u)
        s = sum(b)
        return InFace(f, (b[0] / s, b[1] / s, b[2] / s))
    raise TypeError(f"not a surface point: {p!r}")


def parse_point_spec(spec: str) -> SurfacePoint:
    """Parse ``vertex:ID``, ``edge:ID:U`` or ``face:ID:B0,B1,B2``."""
    parts = spec.strip().split(":")
    try:
        kind = parts[0]
        if kind == "vertex" and len(parts) == 2:
            return AtVertex(int(parts[1]))
        if kind == "edge" and len(parts) == 3:
            return OnEdge(int(parts[1]), float(parts[2]))
        if kind == "face" and len(parts) == 3:
            b = tuple(float(x) for x in parts[2].split(","))
            if len(b) != 3:
                raise ValueError
            return InFace(int(parts[1]), b)
    except ValueError:
        pass
    raise MeshError(f"malformed point spec {spec!r}")


def format_point_spec(p: SurfacePoint) -> str:
    if isinstance(p, AtVertex):
        return f"vertex:{p.vertex}"
    if isinstance(p, OnEdge):
        return f"edge:{p.edge}:{p.u!r}"
    return f"face:{p.face}:" + ",".join(repr(x) for x in p.bary)


# --------------------------------------------------------------------------
# OBJ input / output
# --------------------------------------------------------------------------


def _obj_index(tok: str, nv: int) -> int:
    i = int(tok.split("/")[0])
    if i < 0:
        return nv + i
    if i == 0:
        raise MeshError("OBJ indices are 1-based")
    return i - 1


def parse_obj(text: str) -> tuple[list[tuple[float, float, float]], list[list[int]]]:
    verts: list[tuple[float, float, float]] = []
    faces: list[list[int]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        tok = line.split("#", 1)[0].split()
        if not tok:
            continue
        if tok[0] == "v":
            if len(tok) < 4:
                raise MeshError(f"line {lineno}: vertex needs 3 coordinates")
            verts.append((float(tok[1]), float(tok[2]), float(tok[3])))
        elif tok[0] == "f":
            if len(tok) != 4:
                raise MeshError(f"line {lineno}: non-triangular face")
            faces.append([_obj_index(t, len(verts)) for t in tok[1:]])
    return verts, faces


def load_mesh(source: str, eps_angle: float = EPS_ANGLE) -> TriangleMesh:
    """Build a mesh from OBJ text."""
    verts, faces = parse_obj(source)
    return TriangleMesh(verts, faces, eps_angle=eps_angle)


def load_mesh_file(path, eps_angle: float = EPS_ANGLE) -> TriangleMesh:
    with open(path, encoding="utf-8") as fh:
        return load_mesh(fh.read(), eps_angle=eps_angle)


def emit_obj(mesh: TriangleMesh) -> str:
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.positions]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    return "\n".join(lines) + "\n"


def iter_incident_faces(mesh: TriangleMesh, v: int) -> Iterable[int]:
    return (h // 3 for h in mesh.fan[v])
