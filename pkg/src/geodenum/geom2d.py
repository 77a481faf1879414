"""Planar geometry in half-edge frames and circular angle arithmetic.

Planar points are complex numbers ``x + iy``.
"""

from __future__ import annotations

import cmath
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Optional, Sequence

from .mesh import EPS_ANGLE, MeshError, TriangleMesh


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class RigidMotion2:
    """Rotation by ``theta`` followed by translation ``(tx, ty)``."""

    theta: float
    tx: float = 0.0
    ty: float = 0.0

    @property
    def rotation(self) -> complex:
        return cmath.rect(1.0, self.theta)

    @property
    def translation(self) -> complex:
        return complex(self.tx, self.ty)

    def apply(self, z: complex) -> complex:
        return z * self.rotation + self.translation

    def compose(self, other: "RigidMotion2") -> "RigidMotion2":
        """Motion applying ``other`` first, then ``self``."""
        t = other.translation * self.rotation + self.translation
        return RigidMotion2(self.theta + other.theta, t.real, t.imag)

    def inverse(self) -> "RigidMotion2":
        t = -self.translation * self.rotation.conjugate()
        return RigidMotion2(-self.theta, t.real, t.imag)

    @classmethod
    def from_complex(cls, rot: complex, trans: complex) -> "RigidMotion2":
        return cls(cmath.phase(rot), trans.real, trans.imag)


def unfold_across(mesh: TriangleMesh, h: int) -> RigidMotion2:
    """Map from the frame of ``h`` to the frame of its twin.

    The shared edge is fixed pointwise (x -> L - x) and the face of ``h``
    lands at y < 0, i.e. unfolded into the plane of the twin's face.
    """
    if mesh.twin[h] == -1:
        raise MeshError(f"half-edge {h} is on the boundary")
    return RigidMotion2(math.pi, mesh.length[h], 0.0)


def flip_frame(z: complex, length: float) -> complex:
    """Fast form of :func:`unfold_across` on a single point."""
    return length - z


def project_on_edge(center: complex, p: complex) -> float:
    """x where the segment from ``center`` (below the edge) to ``p`` (above) meets y = 0."""
    if not (center.imag < 0.0 < p.imag):
        raise GeometryError("project_on_edge needs center.y < 0 < p.y")
    return center.real + (p.real - center.real) * (-center.imag) / (p.imag - center.imag)


def ray_hit_edge(center: complex, p: complex) -> float:
    """x where the ray from ``center`` through ``p`` meets y = 0.

    Both points lie above the edge with ``p`` the nearer one.
    """
    dy = center.imag - p.imag
    if dy <= 0.0:
        raise GeometryError("ray does not descend to the edge")
    return center.real + (p.real - center.real) * center.imag / dy


def dir_hit_edge(center: complex, direction: complex) -> float:
    """x where the ray from ``center`` along ``direction`` meets y = 0."""
    if direction.imag >= 0.0:
        raise GeometryError("ray does not descend to the edge")
    return center.real - center.imag * direction.real / direction.imag


def wrap(angle: float, tau: float) -> float:
    a = math.fmod(angle, tau)
    if a < 0.0:
        a += tau
    if a >= tau:
        a -= tau
    return a


def direction_angle_at_vertex(mesh: TriangleMesh, v: int, f: int, direction: complex, eps: float = EPS_ANGLE) -> float:
    """Angle of a direction leaving ``v`` into face ``f``, measured from e_v.

    ``direction`` is given in the frame of face ``f``.  The result is the sum
    of the full corners between e_v and ``f`` plus the angle inside ``f``,
    reduced modulo the total angle of ``v``.
    """
    if direction == 0:
        raise GeometryError("zero direction")
    h = mesh.halfedge_in_face(f, v)
    local = direction * mesh.he_dir[h].conjugate()
    phi = cmath.phase(local)
    corner = mesh.corner[h]
    if phi < -eps or phi > corner + eps:
        raise GeometryError(f"direction outside the sector of face {f} at vertex {v}")
    phi = min(max(phi, 0.0), corner)
    return wrap(mesh.fan_offset[h] + phi, mesh.tau[v])


def circ_offset(a: float, b: float, tau: float) -> float:
    """Counterclockwise distance from ``a`` to ``b`` in [0, tau)."""
    return wrap(b - a, tau)


def circular_window_query(
    angles: Sequence[float],
    center: float,
    w: float,
    side: str,
    tau: float,
    eps: float = EPS_ANGLE,
) -> Optional[float]:
    """Nearest element of a sorted angle list inside an open circular window.

    ``side="below"`` returns the largest element of (center - w, center);
    ``side="above"`` the smallest of (center, center + w).  Elements within
    ``eps`` of a window end count as outside.
    """
    if not 0.0 < w < tau:
        raise GeometryError("window width must lie in (0, tau)")
    n = len(angles)
    if side == "below":
        # walk clockwise from the center; only elements within eps of it can be skipped
        i = bisect_right(angles, center)
        for k in range(n):
            a = angles[(i - 1 - k) % n]
            off = circ_offset(a, center, tau)
            if off <= eps or off >= tau - eps:
                continue
            return a if off < w - eps else None
        return None
    if side == "above":
        i = bisect_left(angles, center)
        for k in range(n):
            a = angles[(i + k) % n]
            off = circ_offset(center, a, tau)
            if off <= eps or off >= tau - eps:
                continue
            return a if off < w - eps else None
        return None
    raise ValueError(f"side must be 'below' or 'above', not {side!r}")


def window_query_linear(angles, center, w, side, tau, eps=EPS_ANGLE):
    """O(n) reference for :func:`circular_window_query`."""
    best = None
    best_off = None
    for a in angles:
        if side == "below":
            off = circ_offset(a, center, tau)
        else:
            off = circ_offset(center, a, tau)
        if eps < off < w - eps and (best_off is None or off < best_off):
            best, best_off = a, off
    return best
