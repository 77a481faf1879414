import math
import random

import pytest

from geodenum import fixtures
from geodenum.mesh import AtVertex, InFace, OnEdge


def random_point(mesh, rng, kinds=("face", "face", "edge", "vertex")):
    kind = rng.choice(kinds)
    if kind == "vertex":
        return AtVertex(rng.randrange(mesh.n_vertices))
    if kind == "edge":
        return OnEdge(rng.randrange(mesh.n_edges), rng.uniform(0.1, 0.9))
    w = [rng.uniform(0.1, 1.0) for _ in range(3)]
    s = sum(w)
    return InFace(rng.randrange(mesh.n_faces), tuple(x / s for x in w))


def same_set(a, b, tol=1e-6):
    """Set equality of path lists: pointwise within tol, lengths within 1e-9 relative."""
    def match(x, y):
        if len(x.points) != len(y.points):
            return False
        if abs(x.length - y.length) > 1e-9 * max(1.0, x.length):
            return False
        return all(max(abs(p[k] - q[k]) for k in range(3)) <= tol for p, q in zip(x.points, y.points))

    return len(a) == len(b) and all(any(match(x, y) for y in b) for x in a) and all(any(match(y, x) for x in a) for y in b)


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture(scope="session")
def cube():
    return fixtures.cube()


@pytest.fixture(scope="session")
def dented():
    return fixtures.dented_octahedron()


@pytest.fixture(scope="session")
def torus():
    return fixtures.torus(6, 4)


SQRT5 = math.sqrt(5.0)

# filled by the acceptance tests, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def fan_mesh(n, height=0.0, radius=1.0):
    """Center vertex 0 ringed by n link vertices alternating at z = +height and -height."""
    from geodenum.mesh import TriangleMesh

    pts = [(0.0, 0.0, 0.0)]
    for k in range(n):
        a = 2 * math.pi * k / n
        pts.append((radius * math.cos(a), radius * math.sin(a), height if k % 2 == 0 else -height))
    faces = [(0, 1 + k, 1 + (k + 1) % n) for k in range(n)]
    return TriangleMesh(pts, faces)
