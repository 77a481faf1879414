"""Built-in test meshes."""

from __future__ import annotations

import math

from .mesh import MeshError, TriangleMesh


def flat_sheet(n: int = 1, size: float = 1.0) -> TriangleMesh:
    """Square ``n x n`` grid in the plane z = 0, diagonals from (i+1, j) to (i, j+1)."""
    pts = [(size * i / n, size * j / n, 0.0) for j in range(n + 1) for i in range(n + 1)]

    def vid(i, j):
        return j * (n + 1) + i

    faces = []
    for j in range(n):
        for i in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            faces.append((a, b, d))
            faces.append((b, c, d))
    return TriangleMesh(pts, faces)


def tetrahedron() -> TriangleMesh:
    pts = [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)]
    faces = [(0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2)]
    return TriangleMesh(pts, faces)


def cube() -> TriangleMesh:
    """Unit cube, each square face split along one diagonal."""
    pts = [(float(x), float(y), float(z)) for z in (0, 1) for y in (0, 1) for x in (0, 1)]
    quads = [
        (0, 2, 3, 1),  # z = 0
        (4, 5, 7, 6),  # z = 1
        (0, 1, 5, 4),  # y = 0
        (2, 6, 7, 3),  # y = 1
        (0, 4, 6, 2),  # x = 0
        (1, 3, 7, 5),  # x = 1
    ]
    faces = []
    for a, b, c, d in quads:
        faces.append((a, b, c))
        faces.append((a, c, d))
    return TriangleMesh(pts, faces)


def dented_octahedron(height: float = 0.6) -> TriangleMesh:
    """Octahedron whose top apex sits at the centroid of a saddle-shaped equator.

    The equator alternates between z = +height and z = -height, which makes
    the apex (vertex 0) a saddle with total angle above 2*pi.
    """
    pts = [
        (0.0, 0.0, 0.0),
        (1.0, 0.0, height),
        (0.0, 1.0, -height),
        (-1.0, 0.0, height),
        (0.0, -1.0, -height),
        (0.0, 0.0, -1.5),
    ]
    faces = []
    for i in range(4):
        a, b = 1 + i, 1 + (i + 1) % 4
        faces.append((0, a, b))
        faces.append((5, b, a))
    return TriangleMesh(pts, faces)


def torus(n_major: int = 8, n_minor: int = 8, major: float = 2.0, minor: float = 1.0) -> TriangleMesh:
    if n_major < 3 or n_minor < 3:
        raise MeshError("torus needs at least 3 segments each way")
    pts = []
    for i in range(n_major):
        th = 2 * math.pi * i / n_major
        for j in range(n_minor):
            ph = 2 * math.pi * j / n_minor
            r = major + minor * math.cos(ph)
            pts.append((r * math.cos(th), r * math.sin(th), minor * math.sin(ph)))

    def vid(i, j):
        return (i % n_major) * n_minor + (j % n_minor)

    faces = []
    for i in range(n_major):
        for j in range(n_minor):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            faces.append((a, b, c))
            faces.append((a, c, d))
    return TriangleMesh(pts, faces)


def by_name(spec: str) -> TriangleMesh:
    """``sheet[:n]``, ``tetrahedron``, ``cube``, ``dented-octahedron``, ``torus[:M:N]``."""
    name, *args = spec.split(":")
    try:
        nums = [int(a) for a in args]
    except ValueError:
        raise MeshError(f"bad fixture arguments in {spec!r}") from None
    if name == "sheet":
        return flat_sheet(*nums)
    if name == "tetrahedron" and not nums:
        return tetrahedron()
    if name == "cube" and not nums:
        return cube()
    if name == "dented-octahedron" and not nums:
        return dented_octahedron()
    if name == "torus":
        return torus(*nums)
    raise MeshError(f"unknown fixture {spec!r}")
