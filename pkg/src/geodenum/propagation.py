"""Event-driven construction of geodesic interval trees.

An interval lives on a half-edge ``h`` and stands for the family of straight
(unfolded) rays leaving its ``center`` that cross the face left of ``h`` and
reach the extent ``[lo, hi]`` on ``h``.  The center is expressed in the frame
of ``h`` and lies on the face side (y > 0): it is the source, or the last
hyperbolic vertex, unfolded into the plane of that face.
"""

from __future__ import annotations

import cmath
import heapq
import logging
import math
import time as _time
from array import array
from bisect import bisect_right
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Optional

from sortedcontainers import SortedList

from .geom2d import circular_window_query, circ_offset, dir_hit_edge, wrap
from .mesh import EPS_ANGLE, AtVertex, InFace, OnEdge, SurfacePoint, TriangleMesh, canonicalize

logger = logging.getLogger(__name__)

EDGE_EVENT = 0
VERTEX_EVENT = 1
DEFAULT_EVENT_CAP = 10**8
# apex-in-cone test slack, relative to the crossed edge length
APEX_REL_TOL = 1e-9


class Mode(str, Enum):
    COMPLETE = "complete"
    REDUCED = "reduced"


class BuildCapExceeded(RuntimeError):
    """The event cap was hit; ``tree`` holds the partial result."""

    def __init__(self, radius_reached: float, tree: "GeodesicIntervalTree"):
        super().__init__(f"event cap exceeded after reaching radius {radius_reached:.6g}")
        self.radius_reached = radius_reached
        self.tree = tree


@dataclass(frozen=True)
class Interval:
    id: int
    parent: Optional[int]
    edge: int
    face: int
    lo: float
    hi: float
    center: complex
    depth: float
    is_pseudo_source_root: bool


@dataclass(frozen=True, order=True)
class Event:
    time: float
    seq: int
    kind: int
    interval: int


@dataclass
class BuildStats:
    intervals: int = 0
    edge_events: int = 0
    vertex_events: int = 0
    hyperbolic_vertex_events: int = 0
    propagating_vertex_events: int = 0
    events_pushed: int = 0
    max_queue: int = 0
    radius_reached: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def propagating_ratio(self) -> float:
        if self.hyperbolic_vertex_events == 0:
            return float("nan")
        return self.propagating_vertex_events / self.hyperbolic_vertex_events


class _AngleView:
    """Read-only float view of a SortedList of (angle, record) pairs."""

    __slots__ = ("_sl",)

    def __init__(self, sl):
        self._sl = sl

    def __len__(self):
        return len(self._sl)

    def __getitem__(self, i):
        return self._sl[i][0]


class VertexRegistry:
    """Arrivals recorded at vertices.

    ``records[v]`` lists ``(interval, arrival_time, incoming_angle)`` in
    processing order.  For interior hyperbolic vertices ``incoming[v]`` keeps
    the incoming angles sorted, paired with record indices, and ``ranges[v]``
    the outgoing ranges ``(mu, nu)`` that produced pseudo-sources.
    """

    def __init__(self, mesh: TriangleMesh):
        n = mesh.n_vertices
        self.records: list[list[tuple[int, float, float]]] = [[] for _ in range(n)]
        self.incoming: dict[int, SortedList] = {v: SortedList() for v in range(n) if mesh.is_pseudo_source(v)}
        self.ranges: dict[int, list[tuple[float, float]]] = {v: [] for v in self.incoming}

    def add(self, v: int, interval: int, arrival: float, angle: float) -> int:
        recs = self.records[v]
        recs.append((interval, arrival, angle))
        idx = len(recs) - 1
        sl = self.incoming.get(v)
        if sl is not None:
            sl.add((angle, idx))
        return idx

    def angles(self, v: int) -> _AngleView:
        return _AngleView(self.incoming[v])

    def in_window(self, v: int, start: float, width: float, tau: float, eps: float = EPS_ANGLE):
        """Records whose incoming angle lies in the closed arc [start, start + width]."""
        sl = self.incoming[v]
        lo = start - eps
        hi = start + width + eps
        out = []
        pieces = []
        if lo < 0.0:
            pieces += [(lo + tau, tau), (0.0, hi)]
        elif hi >= tau:
            pieces += [(lo, tau), (0.0, hi - tau)]
        else:
            pieces.append((lo, hi))
        seen = set()
        for a, b in pieces:
            for ang, idx in sl.irange((a, -1), (b, math.inf)):
                if idx not in seen:
                    seen.add(idx)
                    out.append(idx)
        out.sort()
        return [self.records[v][i] for i in out]

    def n_records(self) -> int:
        return sum(len(r) for r in self.records)


class GeodesicIntervalTree:
    """Arena of intervals plus per-half-edge lists and the vertex registry."""

    def __init__(self, mesh: TriangleMesh, source: SurfacePoint, radius: float, mode: Mode):
        self.mesh = mesh
        self.source = source
        self.radius = float(radius)
        self.mode = Mode(mode)
        self.parent = array("q")
        self.edge = array("q")
        self.lo = array("d")
        self.hi = array("d")
        self.cx = array("d")
        self.cy = array("d")
        self.depth = array("d")
        self.root = array("b")
        self.by_halfedge: list[list[int]] = [[] for _ in range(mesh.n_halfedges)]
        self.registry = VertexRegistry(mesh)
        self.stats = BuildStats()

    def __len__(self) -> int:
        return len(self.edge)

    def add_interval(self, parent: int, edge: int, lo: float, hi: float, center: complex, depth: float, root: bool) -> int:
        i = len(self.edge)
        self.parent.append(parent)
        self.edge.append(edge)
        self.lo.append(lo)
        self.hi.append(hi)
        self.cx.append(center.real)
        self.cy.append(center.imag)
        self.depth.append(depth)
        self.root.append(1 if root else 0)
        self.by_halfedge[edge].append(i)
        return i

    def center(self, i: int) -> complex:
        return complex(self.cx[i], self.cy[i])

    def interval(self, i: int) -> Interval:
        p = self.parent[i]
        return Interval(
            id=i,
            parent=None if p < 0 else p,
            edge=self.edge[i],
            face=self.edge[i] // 3,
            lo=self.lo[i],
            hi=self.hi[i],
            center=self.center(i),
            depth=self.depth[i],
            is_pseudo_source_root=bool(self.root[i]),
        )

    def arena_bytes(self) -> int:
        """Bytes held by the interval columns, half-edge index and registry."""
        cols = (self.parent, self.edge, self.lo, self.hi, self.cx, self.cy, self.depth, self.root)
        n = sum(a.itemsize * len(a) for a in cols)
        n += 8 * len(self)  # one id per interval in the half-edge lists
        n += 24 * self.registry.n_records()
        return n


# --------------------------------------------------------------------------
# Geometric steps
# --------------------------------------------------------------------------


def edge_event_time(center: complex, lo: float, hi: float, depth: float) -> float:
    x = min(max(center.real, lo), hi)
    return abs(center - x) + depth


def initial_intervals(mesh: TriangleMesh, source: SurfacePoint) -> list[tuple[int, complex]]:
    """(half-edge, center) for every edge facing the source."""
    out = []
    if isinstance(source, InFace):
        s = mesh.point_in_face(source, source.face)
        for i in range(3):
            h = 3 * source.face + i
            out.append((h, mesh.face_to_he(h, s)))
    elif isinstance(source, OnEdge):
        h0 = mesh.edge_he[source.edge]
        for h, u in ((h0, source.u), (mesh.twin[h0], 1.0 - source.u)):
            if h == -1:
                continue
            s = mesh.he_to_face(h, complex(u * mesh.length[h], 0.0))
            for k in (mesh.next(h), mesh.prev(h)):
                out.append((k, mesh.face_to_he(k, s)))
    elif isinstance(source, AtVertex):
        for h in mesh.fan[source.vertex]:
            k = mesh.next(h)
            out.append((k, mesh.apex2d[k]))
    else:
        raise TypeError(f"not a surface point: {source!r}")
    return out


def initialize(mesh: TriangleMesh, source: SurfacePoint):
    """Initial intervals and their events.

    Returns ``(intervals, events)`` where intervals are
    ``(edge, lo, hi, center)`` tuples and events ``(time, kind, index)``.
    """
    intervals = []
    events = []
    for h, c in initial_intervals(mesh, source):
        idx = len(intervals)
        L = mesh.length[h]
        intervals.append((h, 0.0, L, c))
        events.append((edge_event_time(c, 0.0, L, 0.0), EDGE_EVENT, idx))
        events.append((abs(c), VERTEX_EVENT, idx))
    for h, c in boundary_rays(mesh, source):
        events.append((abs(c), VERTEX_EVENT, len(intervals)))
        intervals.append((h, 0.0, 0.0, c))
    return intervals, events


def boundary_rays(mesh: TriangleMesh, source: SurfacePoint) -> list[tuple[int, complex]]:
    """Vertices seen from the source only along a boundary edge.

    Each is returned as a zero-width (half-edge, center) pair whose
    half-edge starts at that vertex; it carries a vertex event only.
    """
    if isinstance(source, OnEdge):
        h = mesh.edge_he[source.edge]
        if mesh.twin[h] != -1:
            return []
        return [(h, complex(source.u * mesh.length[h], 0.0))]
    if isinstance(source, AtVertex) and mesh.boundary_vertex[source.vertex]:
        k = mesh.prev(mesh.fan[source.vertex][-1])
        if mesh.twin[k] == -1:
            return [(k, complex(mesh.length[k], 0.0))]
    return []


def propagate_interval(mesh: TriangleMesh, edge: int, lo: float, hi: float, center: complex, eps_len: float):
    """Children of an interval in the face across its edge.

    Returns a list of ``(half_edge, lo, hi, center, starts_at_apex)``.
    """
    t = mesh.twin[edge]
    if t == -1:
        return []
    L = mesh.length[edge]
    c = L - center  # unfolded into the twin frame, c.imag < 0
    left = L - hi
    right = L - lo
    a = mesh.apex2d[t]
    cyn = -c.imag
    xa = c.real + (a.real - c.real) * cyn / (a.imag + cyn)
    tol = APEX_REL_TOL * L
    out = []
    if xa >= left - tol:
        # rays left of the apex exit through prev(t), which starts at the apex
        kp = t + 2 if t % 3 == 0 else t - 1
        rot, tr = mesh.to_prev[t]
        cp = c * rot + tr
        Lk = mesh.length[kp]
        far = _ray_x(cp, left * rot + tr)
        if xa > right + tol:
            near = _ray_x(cp, right * rot + tr)
            lo_k, hi_k = max(near, 0.0), min(far, Lk)
            if hi_k - lo_k > eps_len:
                out.append((kp, lo_k, hi_k, cp, False))
        else:
            hi_k = min(max(far, 0.0), Lk)
            out.append((kp, 0.0, hi_k, cp, True))
    if xa <= right + tol:
        kn = t - 2 if t % 3 == 2 else t + 1
        rot, tr = mesh.to_next[t]
        cn = c * rot + tr
        Lk = mesh.length[kn]
        near = _ray_x(cn, right * rot + tr)
        far = Lk if xa >= left - tol else _ray_x(cn, left * rot + tr)
        lo_k, hi_k = max(near, 0.0), min(far, Lk)
        if hi_k - lo_k > eps_len:
            out.append((kn, lo_k, hi_k, cn, False))
    return out


def _ray_x(c: complex, p: complex) -> float:
    dy = c.imag - p.imag
    if dy <= 0.0:
        return math.inf if p.real >= c.real else -math.inf
    return c.real + (p.real - c.real) * c.imag / dy


def make_pseudo_source_intervals(
    mesh: TriangleMesh,
    v: int,
    mu: float,
    width: float,
    eps_len: float,
    eps_angle: float = EPS_ANGLE,
):
    """Fan of intervals for outgoing directions [mu, mu + width] at ``v``.

    Returns ``(half_edge, lo, hi, center, starts_at_link_vertex)`` tuples
    in rotational order.
    """
    tau = mesh.tau[v]
    if not 0.0 < width < tau:
        raise ValueError(f"outgoing range width {width} outside (0, tau)")
    fan = mesh.fan[v]
    offsets = [mesh.fan_offset[h] for h in fan]
    mu = wrap(mu, tau)
    nu = mu + width
    k = bisect_right(offsets, mu) - 1
    A = offsets[k]
    out = []
    for _ in range(len(fan) + 1):
        if A >= nu - eps_angle:
            if A <= nu + eps_angle:
                # range ends on a fan edge: the ray along it still reaches the link vertex
                nk = fan[k] - 2 if fan[k] % 3 == 2 else fan[k] + 1
                if not (out and out[-1][0] == nk):
                    out.append((nk, 0.0, 0.0, mesh.apex2d[nk], True))
            break
        h = fan[k]
        theta = mesh.corner[h]
        a = max(mu, A)
        b = min(nu, A + theta)
        if b - a > eps_angle:
            nk = h - 2 if h % 3 == 2 else h + 1
            c = mesh.apex2d[nk]
            rot = mesh.to_next[h][0]
            Lk = mesh.length[nk]
            at_start = a - A <= eps_angle
            lo = 0.0 if at_start else dir_hit_edge(c, cmath.rect(1.0, a - A) * rot)
            hi = Lk if A + theta - b <= eps_angle else dir_hit_edge(c, cmath.rect(1.0, b - A) * rot)
            lo, hi = max(lo, 0.0), min(hi, Lk)
            if hi - lo > eps_len:
                out.append((nk, lo, hi, c, at_start))
        A += theta
        k = (k + 1) % len(fan)
    return out


def incoming_angle(mesh: TriangleMesh, h: int, center: complex) -> float:
    """Direction from origin(h) back toward ``center``, measured from e_v."""
    phi = min(max(cmath.phase(center), 0.0), mesh.corner[h])
    return wrap(mesh.fan_offset[h] + phi, mesh.tau[mesh.origin[h]])


def reduced_range(angles, alpha: float, tau: float, eps: float = EPS_ANGLE):
    """Outgoing range for a new arrival at ``alpha`` given prior incoming angles.

    Returns ``(mu, width)`` or ``None`` when the range is empty.
    """
    delta = tau - 2.0 * math.pi
    if len(angles) and _has_duplicate(angles, alpha, tau, eps):
        return None
    below = circular_window_query(angles, alpha, delta, "below", tau, eps)
    above = circular_window_query(angles, alpha, delta, "above", tau, eps)
    # offsets measured counterclockwise from alpha
    mu_off = math.pi if below is None else tau - math.pi - circ_offset(below, alpha, tau)
    nu_off = tau - math.pi if above is None else math.pi + circ_offset(alpha, above, tau)
    if nu_off - mu_off <= eps:
        return None
    return wrap(alpha + mu_off, tau), nu_off - mu_off


def _has_duplicate(angles, alpha, tau, eps):
    from bisect import bisect_left

    n = len(angles)
    i = bisect_left(angles, alpha)
    for j in (i - 1, i, 0, n - 1):
        if 0 <= j < n:
            d = abs(angles[j] - alpha)
            if min(d, tau - d) <= eps:
                return True
    return False


# --------------------------------------------------------------------------
# Build loop
# --------------------------------------------------------------------------


class _Builder:
    def __init__(self, tree: GeodesicIntervalTree, event_cap: int, eps_len: float):
        self.tree = tree
        self.mesh = tree.mesh
        self.event_cap = event_cap
        self.eps_len = eps_len
        self.heap: list[tuple[float, int, int, int]] = []
        self.seq = 0
        self.R = tree.radius

    def push(self, time: float, kind: int, iid: int) -> None:
        if time >= self.R:
            return
        heapq.heappush(self.heap, (time, self.seq, kind, iid))
        self.seq += 1
        st = self.tree.stats
        st.events_pushed += 1
        if len(self.heap) > st.max_queue:
            st.max_queue = len(self.heap)

    def add(self, parent, edge, lo, hi, center, depth, root, vertex_event):
        tree = self.tree
        iid = tree.add_interval(parent, edge, lo, hi, center, depth, root)
        if hi - lo > self.eps_len:
            self.push(edge_event_time(center, lo, hi, depth), EDGE_EVENT, iid)
        if vertex_event:
            self.push(abs(center) + depth, VERTEX_EVENT, iid)
        return iid

    def run(self, time_budget: Optional[float], progress: Optional[Callable], progress_every: float) -> None:
        tree = self.tree
        intervals, events = initialize(self.mesh, tree.source)
        for h, lo, hi, c in intervals:
            tree.add_interval(-1, h, lo, hi, c, 0.0, True)
        for t, kind, idx in events:
            self.push(t, kind, idx)
        st = tree.stats
        heap = self.heap
        processed = 0
        last = 0.0
        start = _time.perf_counter()
        next_report = start + progress_every if progress else math.inf
        deadline = start + time_budget if time_budget else math.inf
        while heap and heap[0][0] < self.R:
            if processed & 255 == 0 and processed:
                now = _time.perf_counter()
                if now >= next_report:
                    progress(now - start, heap[0][0], len(tree))
                    next_report = now + progress_every
                if now >= deadline:
                    tree.radius = heap[0][0]
                    break
            t, _, kind, iid = heapq.heappop(heap)
            assert t >= last - 1e-9 * (1.0 + last), "event times must be nondecreasing"
            last = max(last, t)
            processed += 1
            if processed > self.event_cap:
                st.radius_reached = t
                st.intervals = len(tree)
                raise BuildCapExceeded(t, tree)
            if kind == EDGE_EVENT:
                st.edge_events += 1
                self.handle_edge_event(iid)
            else:
                st.vertex_events += 1
                self.handle_vertex_event(iid, t)
        st.radius_reached = min(tree.radius, heap[0][0]) if heap else tree.radius
        st.intervals = len(tree)
        if progress:
            progress(_time.perf_counter() - start, st.radius_reached, len(tree))

    def handle_edge_event(self, iid: int) -> None:
        tree = self.tree
        center = complex(tree.cx[iid], tree.cy[iid])
        depth = tree.depth[iid]
        for k, lo, hi, c, apex in propagate_interval(
            self.mesh, tree.edge[iid], tree.lo[iid], tree.hi[iid], center, self.eps_len
        ):
            self.add(iid, k, lo, hi, c, depth, False, apex)

    def handle_vertex_event(self, iid: int, arrival: float) -> list[int]:
        tree = self.tree
        mesh = self.mesh
        h = tree.edge[iid]
        v = mesh.origin[h]
        alpha = incoming_angle(mesh, h, complex(tree.cx[iid], tree.cy[iid]))
        reg = tree.registry
        if not mesh.is_pseudo_source(v):
            reg.add(v, iid, arrival, alpha)
            return []
        tree.stats.hyperbolic_vertex_events += 1
        tau = mesh.tau[v]
        if tree.mode is Mode.COMPLETE:
            rng = (wrap(alpha + math.pi, tau), tau - 2.0 * math.pi)
        else:
            rng = reduced_range(reg.angles(v), alpha, tau)
        reg.add(v, iid, arrival, alpha)
        if rng is None:
            return []
        mu, width = rng
        children = []
        for k, lo, hi, c, at_link in make_pseudo_source_intervals(mesh, v, mu, width, self.eps_len):
            children.append(self.add(iid, k, lo, hi, c, arrival, True, at_link))
        if children:
            tree.stats.propagating_vertex_events += 1
            reg.ranges[v].append((mu, wrap(mu + width, tau)))
        return children


def build_git(
    mesh: TriangleMesh,
    source: SurfacePoint,
    radius: float,
    mode: Mode | str = Mode.REDUCED,
    event_cap: int = DEFAULT_EVENT_CAP,
    time_budget: Optional[float] = None,
    progress: Optional[Callable[[float, float, int], None]] = None,
    progress_every: float = 1.0,
) -> GeodesicIntervalTree:
    """Build a complete or reduced geodesic interval tree up to ``radius``.

    With ``time_budget`` (seconds) the build may stop early; the tree's
    radius is then the time of the next unprocessed event.  ``progress`` is
    called as ``progress(elapsed, radius_reached, n_intervals)`` roughly every
    ``progress_every`` seconds.

    Raises
    ------
    BuildCapExceeded
        If more than ``event_cap`` events would be processed.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    source = canonicalize(mesh, source)
    tree = GeodesicIntervalTree(mesh, source, radius, Mode(mode))
    eps_len = 1e-12 * mesh.mean_edge_length
    _Builder(tree, event_cap, eps_len).run(time_budget, progress, progress_every)
    logger.debug("built %s tree: %d intervals", tree.mode.value, len(tree))
    return tree


def record_statistics(tree: GeodesicIntervalTree) -> BuildStats:
    return tree.stats
