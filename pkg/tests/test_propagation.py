import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from geodenum import fixtures
from geodenum.mesh import AtVertex, InFace, OnEdge, TriangleMesh
from geodenum.propagation import (
    EDGE_EVENT,
    VERTEX_EVENT,
    BuildCapExceeded,
    Mode,
    build_git,
    initialize,
    make_pseudo_source_intervals,
    propagate_interval,
    record_statistics,
    reduced_range,
)
from geodenum.query import construct_geodesic

from conftest import fan_mesh, random_point

EPS_LEN = 1e-12


def test_flat_sheet_exhausts_queue():
    m = fixtures.flat_sheet(2)
    tree = build_git(m, InFace(0, (1 / 3, 1 / 3, 1 / 3)), 10.0)
    assert all(d == 0.0 for d in tree.depth)
    # nothing left to do long before R
    assert tree.stats.radius_reached == 10.0
    assert tree.stats.hyperbolic_vertex_events == 0


def test_tetrahedron_tiny_radius_keeps_initial_intervals():
    m = fixtures.tetrahedron()
    tree = build_git(m, InFace(0, (0.3, 0.3, 0.4)), 1e-12)
    assert len(tree) == 3
    assert tree.stats.edge_events == 0


def test_radius_must_be_positive():
    with pytest.raises(ValueError):
        build_git(fixtures.cube(), AtVertex(0), 0.0)


@given(st.integers(0, 10**6), st.floats(0.5, 12.0))
@settings(max_examples=15, deadline=None)
def test_convex_modes_agree(seed, R):
    m = fixtures.tetrahedron()
    s = random_point(m, random.Random(seed))
    a = build_git(m, s, R, Mode.COMPLETE)
    b = build_git(m, s, R, Mode.REDUCED)
    assert len(a) == len(b)
    assert a.stats.hyperbolic_vertex_events == b.stats.hyperbolic_vertex_events == 0


def test_initialize_face_source():
    m = fixtures.tetrahedron()
    intervals, events = initialize(m, InFace(0, (0.3, 0.3, 0.4)))
    assert len(intervals) == 3
    assert sum(1 for e in events if e[1] == EDGE_EVENT) == 3
    assert sum(1 for e in events if e[1] == VERTEX_EVENT) == 3
    for h, lo, hi, c in intervals:
        assert (lo, hi) == (0.0, m.length[h])
        assert c.imag > 0


def test_initialize_edge_source(dented):
    e = next(e for e in range(dented.n_edges) if dented.twin[dented.edge_he[e]] != -1)
    intervals, _ = initialize(dented, OnEdge(e, 0.4))
    assert len(intervals) == 4


def test_initialize_vertex_source():
    m = fixtures.tetrahedron()
    intervals, _ = initialize(m, AtVertex(0))
    assert len(intervals) == 3
    for h, _, _, _ in intervals:
        assert 0 not in m.edge_vertices(m.edge_of[h])


def test_initialize_boundary_edge_source():
    m = fixtures.flat_sheet(1)
    e = m.edge_of[m.boundary_halfedges[0]]
    intervals, events = initialize(m, OnEdge(e, 0.5))
    assert len(intervals) == 3
    # the far end of the boundary edge is only reached along the edge itself
    h, lo, hi, c = intervals[2]
    assert (lo, hi) == (0.0, 0.0) and c == complex(0.5 * m.length[h], 0.0)
    assert [k for _, k, i in events if i == 2] == [VERTEX_EVENT]


def test_boundary_corner_reaches_neighbours_along_edges():
    m = fixtures.flat_sheet(2)
    tree = build_git(m, AtVertex(0), 2.0)
    for v in (1, 3):
        assert [a for _, a, _ in tree.registry.records[v]] == [pytest.approx(0.5)]


def test_propagate_full_extent_splits_at_apex(torus):
    h = 10
    L = torus.length[h]
    c = torus.apex2d[h]
    kids = propagate_interval(torus, h, 0.0, L, c, EPS_LEN)
    assert len(kids) == 2
    t = torus.twin[h]
    by_edge = {k[0]: k for k in kids}
    assert set(by_edge) == {torus.next(t), torus.prev(t)}
    for k, lo, hi, _, _ in kids:
        assert lo == pytest.approx(0.0, abs=1e-12)
        assert hi == pytest.approx(torus.length[k], rel=1e-12)
    assert by_edge[torus.prev(t)][4] is True
    assert by_edge[torus.next(t)][4] is False


def _kite():
    # shared edge (0,0)-(1,0); apex (0.5, 1) above, (0.5, -1) below
    pts = [(0, 0, 0), (1, 0, 0), (0.5, 1, 0), (0.5, -1, 0)]
    return TriangleMesh(pts, [(0, 1, 2), (1, 0, 3)])


def test_propagate_single_child_example():
    m = _kite()
    h = 3  # 1 -> 0 in the lower face
    assert m.twin[h] == 0
    # extent [0.1, 0.4] seen from the upper face is [0.6, 0.9] on this half-edge
    kids = propagate_interval(m, h, 0.6, 0.9, 0.5 + 1j, EPS_LEN)
    assert len(kids) == 1
    k, lo, hi, c, at_apex = kids[0]
    assert k == m.prev(0)  # apex (0.5, 1) -> (0, 0)
    r5 = math.sqrt(5.0)
    # measured from the apex end of the half-edge
    assert lo == pytest.approx(r5 / 2 - r5 / 3, abs=1e-12)
    assert hi == pytest.approx(r5 / 2 - r5 / 18, abs=1e-12)
    assert not at_apex
    # crossing points reproduce (1/3, 2/3) and (1/18, 1/9)
    p_lo = m.he_to_3d(k, complex(lo, 0))
    p_hi = m.he_to_3d(k, complex(hi, 0))
    assert p_lo[:2] == pytest.approx((1 / 3, 2 / 3), abs=1e-12)
    assert p_hi[:2] == pytest.approx((1 / 18, 1 / 9), abs=1e-12)


def test_propagate_boundary_has_no_children():
    m = fixtures.flat_sheet(1)
    h = m.boundary_halfedges[0]
    assert propagate_interval(m, h, 0.0, m.length[h], m.apex2d[h], EPS_LEN) == []


def test_reduced_range_first_arrival():
    tau = 2.5 * math.pi
    mu, width = reduced_range([], 0.0, tau)
    assert mu == pytest.approx(math.pi)
    assert mu + width == pytest.approx(1.5 * math.pi)


def test_reduced_range_second_arrival():
    tau = 2.5 * math.pi
    mu, width = reduced_range([0.0], 0.3, tau)
    assert mu == pytest.approx(1.5 * math.pi)
    assert width == pytest.approx(0.3)


def test_reduced_range_empty_between_neighbours():
    tau = 2.5 * math.pi
    assert reduced_range([math.pi - 0.1, math.pi + 0.1], math.pi, tau) is None


def test_reduced_range_duplicate_direction():
    tau = 2.5 * math.pi
    assert reduced_range([1.0], 1.0 + 1e-12, tau) is None


def test_pseudo_source_single_sector():
    m = fan_mesh(6)
    v = 0
    h0 = m.fan[v][0]
    kids = make_pseudo_source_intervals(m, v, 0.1, 0.2, EPS_LEN)
    assert len(kids) == 1
    k, lo, hi, c, at_start = kids[0]
    assert k == m.next(h0)
    assert 0 < lo < hi < m.length[k]
    assert c == pytest.approx(m.apex2d[k], abs=1e-12)
    assert not at_start


def test_pseudo_source_full_sector():
    m = fan_mesh(6)
    h = m.fan[0][2]
    off = m.fan_offset[h]
    kids = make_pseudo_source_intervals(m, 0, off, m.corner[h], EPS_LEN)
    assert len(kids) == 2
    k, lo, hi, _, at_start = kids[0]
    assert k == m.next(h)
    assert (lo, hi) == (0.0, pytest.approx(m.length[k]))
    assert at_start
    # the ray along the closing fan edge only produces a vertex event
    k2, lo2, hi2, _, at_start2 = kids[1]
    assert k2 == m.next(m.fan[0][3])
    assert (lo2, hi2) == (0.0, 0.0) and at_start2


def test_pseudo_source_hexagon_fan():
    # equilateral fan, range of width pi/2 starting mid-sector
    m = fan_mesh(6)
    kids = make_pseudo_source_intervals(m, 0, math.pi / 6, math.pi / 2, EPS_LEN)
    assert len(kids) == 3
    assert kids[2][1:3] == (0.0, 0.0)  # range closes on a fan edge
    (k1, lo1, hi1, _, s1), (k2, lo2, hi2, _, s2) = kids[:2]
    assert k1 == m.next(m.fan[0][0]) and k2 == m.next(m.fan[0][1])
    # the pi/6 ray bisects the first face and meets its far edge at the midpoint
    assert lo1 == pytest.approx(0.5, abs=1e-12)
    assert hi1 == pytest.approx(1.0, abs=1e-12)
    assert (lo2, hi2) == (0.0, pytest.approx(1.0))
    assert (s1, s2) == (False, True)


def _saddle_fan():
    """12-face saddle fan whose excess angle spans between 2 and 3 corners."""
    lo, hi = 0.0, 5.0
    for _ in range(80):
        h = 0.5 * (lo + hi)
        m = fan_mesh(12, h)
        theta = m.corner[m.fan[0][0]]
        delta = m.tau[0] - 2 * math.pi
        if delta < 2.5 * theta:
            lo = h
        else:
            hi = h
    return m


def test_pseudo_source_three_sectors():
    m = _saddle_fan()
    theta = m.corner[m.fan[0][0]]
    delta = m.tau[0] - 2 * math.pi
    assert 2 * theta < delta < 3 * theta
    mu = 0.25 * theta
    kids = make_pseudo_source_intervals(m, 0, mu, delta, EPS_LEN)
    assert len(kids) == 3
    assert [k[4] for k in kids] == [False, True, True]
    assert [k[0] for k in kids] == [m.next(h) for h in m.fan[0][:3]]


def test_pseudo_source_width_within_one_sector():
    m = _saddle_fan()
    theta = m.corner[m.fan[0][0]]
    kids = make_pseudo_source_intervals(m, 0, 0.2 * theta, 0.5 * theta, EPS_LEN)
    assert len(kids) == 1
    assert not kids[0][4]


def test_pseudo_source_rejects_bad_width():
    m = _saddle_fan()
    with pytest.raises(ValueError):
        make_pseudo_source_intervals(m, 0, 0.0, 0.0, EPS_LEN)


def test_complete_ratio_is_one(dented):
    tree = build_git(dented, InFace(1, (0.3, 0.3, 0.4)), 8.0, Mode.COMPLETE)
    st_ = record_statistics(tree)
    assert st_.hyperbolic_vertex_events >= 1
    assert st_.propagating_ratio == 1.0


def test_reduced_ratio_below_one(dented):
    tree = build_git(dented, InFace(1, (0.3, 0.3, 0.4)), 8.0, Mode.REDUCED)
    st_ = record_statistics(tree)
    assert st_.hyperbolic_vertex_events >= 10
    assert st_.propagating_ratio < 1.0


def test_convex_has_no_hyperbolic_events():
    tree = build_git(fixtures.cube(), InFace(0, (0.2, 0.3, 0.5)), 6.0)
    assert record_statistics(tree).hyperbolic_vertex_events == 0


def test_event_cap(torus):
    with pytest.raises(BuildCapExceeded) as info:
        build_git(torus, InFace(0, (0.3, 0.3, 0.4)), 50.0, Mode.COMPLETE, event_cap=500)
    assert info.value.radius_reached > 0
    assert len(info.value.tree) > 0


def test_time_budget_stops_early(torus):
    tree = build_git(torus, InFace(0, (0.3, 0.3, 0.4)), 1e6, Mode.REDUCED, time_budget=0.2)
    assert tree.radius < 1e6
    assert tree.stats.radius_reached == tree.radius


def _arcs_disjoint(ranges, tau, eps=1e-9):
    arcs = []
    for mu, nu in ranges:
        w = (nu - mu) % tau
        arcs.append((mu, w))
    for i in range(len(arcs)):
        for j in range(i):
            a, wa = arcs[i]
            b, wb = arcs[j]
            # b's start outside a's interior and vice versa
            if eps < (b - a) % tau < wa - eps or eps < (a - b) % tau < wb - eps:
                return False
    return True


@pytest.mark.parametrize("name, R", [("dented-octahedron", 9.0), ("torus:6:4", 12.0), ("torus:5:3", 9.0)])
def test_reduced_ranges_disjoint(name, R):
    m = fixtures.by_name(name)
    tree = build_git(m, InFace(0, (0.3, 0.3, 0.4)), R, Mode.REDUCED)
    for v, ranges in tree.registry.ranges.items():
        assert _arcs_disjoint(ranges, m.tau[v])


@pytest.mark.parametrize("mode", list(Mode))
def test_registry_arrivals_nondecreasing(torus, mode):
    tree = build_git(torus, InFace(3, (0.3, 0.3, 0.4)), 8.0, mode)
    for recs in tree.registry.records:
        times = [r[1] for r in recs]
        assert times == sorted(times)


def test_depth_equals_root_chain_length(torus):
    tree = build_git(torus, InFace(0, (0.3, 0.3, 0.4)), 9.0, Mode.COMPLETE)
    roots = [i for i in range(len(tree)) if tree.root[i] and tree.parent[i] >= 0]
    assert roots
    for i in roots[:200]:
        par = tree.parent[i]
        path = construct_geodesic(tree, par, 0j)
        assert path.length == pytest.approx(tree.depth[i], rel=1e-9)


def test_children_inherit_depth(torus):
    tree = build_git(torus, InFace(0, (0.3, 0.3, 0.4)), 7.0, Mode.REDUCED)
    for i in range(len(tree)):
        p = tree.parent[i]
        if p >= 0 and not tree.root[i]:
            assert tree.depth[i] == tree.depth[p]
        assert tree.lo[i] <= tree.hi[i]
        assert 0.0 <= tree.lo[i] and tree.hi[i] <= tree.mesh.length[tree.edge[i]]


def test_builds_are_deterministic(torus):
    a = build_git(torus, InFace(0, (0.3, 0.3, 0.4)), 8.0)
    b = build_git(torus, InFace(0, (0.3, 0.3, 0.4)), 8.0)
    assert list(a.cx) == list(b.cx) and list(a.parent) == list(b.parent)
