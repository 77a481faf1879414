"""Acceptance criteria, one test each.

Every test records a ``PASS``/``FAIL``/``SKIP`` line; the lines are printed
together at the end of the pytest run and also when this file is executed
directly (``python tests/test_acceptance.py``).
"""

import functools
import math
import os
import random
import statistics
import sys
import time

import pytest

from geodenum import cli, fixtures
from geodenum.mesh import AtVertex, InFace, load_mesh_file
from geodenum.oracle import exhaustive_enumerate
from geodenum.propagation import BuildCapExceeded, Mode, build_git
from geodenum.query import (
    build_geodesic_graph,
    enum_complete,
    enum_reduced,
    geodesic_defects,
    paths_of_graph,
)

sys.path.insert(0, os.path.dirname(__file__))
from conftest import ACCEPTANCE_LINES, SQRT5, random_point, same_set  # noqa: E402

ORACLE_FIXTURES = ["sheet:3", "tetrahedron", "cube", "dented-octahedron", "torus:5:3", "torus:6:4", "torus:8:8"]
N_TRIPLES = 150
GRAPH_PATH_LIMIT = 10**4
EVENT_CAP = 1_000_000
SOURCE = InFace(0, (0.3, 0.3, 0.4))

pytestmark = pytest.mark.slow


def report(num, ok, detail):
    line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def report_skip(num, detail):
    line = f"criterion {num:>2}: SKIP  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@functools.lru_cache(maxsize=None)
def triples():
    """Random (mesh, s, t, R) triples with every enumeration the criteria compare."""
    rng = random.Random(20240611)
    meshes = {name: fixtures.by_name(name) for name in ORACLE_FIXTURES}
    out = []
    t0 = time.perf_counter()
    for k in range(N_TRIPLES):
        name = ORACLE_FIXTURES[k % len(ORACLE_FIXTURES)]
        m = meshes[name]
        s, t = random_point(m, rng), random_point(m, rng)
        R = rng.uniform(1.5, 5.0 if name == "torus:8:8" else 6.0) * m.mean_edge_length
        oracle = exhaustive_enumerate(m, s, t, R)
        complete = enum_complete(build_git(m, s, R, Mode.COMPLETE), t)
        tree = build_git(m, s, R, Mode.REDUCED)
        reduced = enum_reduced(tree, t)
        graph = None
        if len(reduced) <= GRAPH_PATH_LIMIT:
            graph = paths_of_graph(build_geodesic_graph(tree, t), R)
        out.append(dict(name=name, mesh=m, s=s, t=t, R=R, oracle=oracle, complete=complete, reduced=reduced, graph=graph))
    return out, time.perf_counter() - t0


def _mismatch_note(bad):
    return "" if not bad else f"; first mismatch {bad[0]}"


def test_c01_oracle_equivalence():
    rows, seconds = triples()
    bad = [(r["name"], r["s"], r["t"], r["R"]) for r in rows if not same_set(r["complete"], r["oracle"])]
    n_paths = sum(len(r["oracle"]) for r in rows)
    ok = not bad and len(rows) >= 100 and seconds <= 300
    detail = f"{len(rows) - len(bad)}/{len(rows)} triples equal, {n_paths} oracle paths, {seconds:.1f}s" + _mismatch_note(bad)
    assert report(1, ok, detail)


def test_c02_mode_equivalence():
    rows, _ = triples()
    bad = [(r["name"], r["s"], r["t"], r["R"]) for r in rows if not same_set(r["reduced"], r["complete"])]
    assert report(2, not bad, f"{len(rows) - len(bad)}/{len(rows)} triples equal" + _mismatch_note(bad))


def test_c03_graph_faithfulness():
    rows, _ = triples()
    checked = [r for r in rows if r["graph"] is not None]
    bad = [(r["name"], r["s"], r["t"], r["R"]) for r in checked if not same_set(r["graph"], r["reduced"])]
    assert report(3, not bad and checked, f"{len(checked) - len(bad)}/{len(checked)} triples equal" + _mismatch_note(bad))


def test_c04_geodesic_validity():
    rows, _ = triples()
    worst_dev, worst_side, n, bad = 0.0, math.inf, 0, []
    for r in rows:
        for key in ("complete", "reduced", "graph", "oracle"):
            for g in r[key] or ():
                d = geodesic_defects(r["mesh"], g, r["R"])
                n += 1
                worst_dev = max(worst_dev, d.max_crossing_deviation)
                worst_side = min(worst_side, d.min_side_angle)
                if not d.ok(1e-6):
                    bad.append((key, r["name"], d))
    side = "none passed" if worst_side == math.inf else f"{worst_side - math.pi:+.2e}"
    detail = f"{n - len(bad)}/{n} paths valid, max crossing deviation {worst_dev:.2e} rad, min side angle - pi {side}"
    assert report(4, not bad, detail + _mismatch_note(bad))


def test_c05_cube_benchmark():
    m = fixtures.cube()
    paths = enum_reduced(build_git(m, AtVertex(0), 2.3, Mode.REDUCED), AtVertex(7))
    full = enum_complete(build_git(m, AtVertex(0), 2.3, Mode.COMPLETE), AtVertex(7))
    errs = [abs(g.length - SQRT5) / SQRT5 for g in paths + full]
    ok = len(paths) == len(full) == 6 and max(errs) <= 1e-9
    assert report(5, ok, f"{len(paths)} geodesics (complete {len(full)}), max relative length error {max(errs):.1e}")


def test_c06_propagating_ratio():
    lines, ok = [], True
    for name in ("dented-octahedron", "torus:6:4"):
        m = fixtures.by_name(name)
        st = build_git(m, SOURCE, 8 * m.mean_edge_length, Mode.COMPLETE).stats
        ok &= st.hyperbolic_vertex_events >= 1 and st.propagating_ratio == 1.0
        lines.append(f"{name} complete {st.propagating_vertex_events}/{st.hyperbolic_vertex_events}")
    m = fixtures.dented_octahedron()
    st = build_git(m, SOURCE, 6 * m.mean_edge_length, Mode.REDUCED).stats
    ok &= st.hyperbolic_vertex_events >= 10 and st.propagating_ratio < 1.0
    lines.append(f"dented reduced {st.propagating_vertex_events}/{st.hyperbolic_vertex_events} = {st.propagating_ratio:.3f}")
    assert report(6, ok, "; ".join(lines))


def _largest_complete(m, radii):
    best = None
    for r in radii:
        try:
            n = len(build_git(m, SOURCE, r * m.mean_edge_length, Mode.COMPLETE, event_cap=EVENT_CAP))
        except BuildCapExceeded:
            break
        best = (r, n)
    return best


def test_c07_reduction_effectiveness():
    radii = [4, 6, 8, 10, 12, 14, 16]
    ok, parts = True, []
    for name in ("dented-octahedron", "torus:6:4"):
        m = fixtures.by_name(name)
        r, n_c = _largest_complete(m, radii)
        n_r = len(build_git(m, SOURCE, r * m.mean_edge_length, Mode.REDUCED))
        ratio = n_r / n_c
        ok &= n_r <= n_c
        if name.startswith("torus"):
            ok &= ratio <= 0.9
        parts.append(f"{name} R={r} mean edges: {n_r}/{n_c} = {ratio:.3f}")
    assert report(7, ok, "; ".join(parts) + f" (event cap {EVENT_CAP})")


def _sweep(m, mode, radii, repeats=1):
    rows = []
    for r in radii:
        best = math.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            tree = build_git(m, SOURCE, r * m.mean_edge_length, mode)
            best = min(best, time.perf_counter() - t0)
        rows.append((r, len(tree), best, tree.arena_bytes()))
    return rows


def _slopes(rows):
    return [
        (math.log(b[1]) - math.log(a[1])) / (math.log(b[0]) - math.log(a[0])) for a, b in zip(rows, rows[1:])
    ]


@functools.lru_cache(maxsize=None)
def reduced_sweep():
    return _sweep(fixtures.torus(6, 4), Mode.REDUCED, [10, 14, 18, 22, 26, 30], repeats=2)


def test_c08_growth_exponents():
    t0 = time.perf_counter()
    red = _slopes(reduced_sweep())
    comp = _slopes(_sweep(fixtures.torus(6, 4), Mode.COMPLETE, [4, 6, 8, 10, 12]))
    seconds = time.perf_counter() - t0
    increasing = all(b >= a for a, b in zip(comp, comp[1:])) and len(comp) >= 3
    ok = 2.5 <= red[-1] <= 3.5 and increasing and seconds <= 600
    detail = (
        f"torus:6:4 reduced final slope {red[-1]:.2f} (all {', '.join(f'{x:.2f}' for x in red)}); "
        f"complete slopes {', '.join(f'{x:.2f}' for x in comp)}; {seconds:.0f}s"
    )
    assert report(8, ok, detail)


def test_c09_output_sensitive_scaling():
    rows = reduced_sweep()
    x = [math.log(n * math.log(n)) for _, n, _, _ in rows]
    y = [math.log(t) for _, _, t, _ in rows]
    slope = statistics.linear_regression(x, y).slope
    ns = [n for _, n, _, _ in rows]
    mem = [b for _, _, _, b in rows]
    fit = statistics.linear_regression(ns, mem)
    dev = max(abs((b - fit.intercept) / (fit.slope * n) - 1.0) for n, b in zip(ns, mem))
    ok = 0.8 <= slope <= 1.2 and dev <= 0.2
    detail = f"time vs N log N slope {slope:.2f}; memory {fit.slope:.1f} B/interval, max deviation from linear {dev:.1%}"
    assert report(9, ok, detail)


def test_c10_elephant():
    path = os.environ.get("GEODENUM_ELEPHANT")
    if not path or not os.path.exists(path):
        report_skip(10, "set GEODENUM_ELEPHANT to an OBJ of the twice-subdivided Elephant mesh")
        pytest.skip("Elephant mesh not available")
    m = load_mesh_file(path)
    R = 131 * m.mean_edge_length
    s = AtVertex(0)
    t0 = time.perf_counter()
    n_c = len(build_git(m, s, R, Mode.COMPLETE))
    t_c = time.perf_counter() - t0
    t0 = time.perf_counter()
    n_r = len(build_git(m, s, R, Mode.REDUCED))
    t_r = time.perf_counter() - t0
    ratio = n_r / n_c
    ok = abs(ratio - 0.55) <= 0.15 and t_r / t_c <= 0.7
    assert report(10, ok, f"N ratio {ratio:.3f}, time ratio {t_r / t_c:.3f}")


def test_c11_determinism(tmp_path, capsys):
    def once(tag):
        tree = tmp_path / f"{tag}.json"
        out = tmp_path / f"{tag}.q.json"
        g = tmp_path / f"{tag}.g.json"
        assert cli.main(["build", "fixture:torus:6:4", "-s", "face:0:0.3,0.3,0.4", "-R", "6", "--unit", "mean-edge",
                         "-o", str(tree), "--quiet-stats"]) == 0
        assert cli.main(["query", str(tree), "-t", "vertex:17", "-o", str(out)]) == 0
        assert cli.main(["graph", str(tree), "-t", "vertex:17", "--expand", "-o", str(g)]) == 0
        return [p.read_bytes() for p in (tree, out, g)]

    a, b = once("a"), once("b")
    capsys.readouterr()
    same = [x == y for x, y in zip(a, b)]
    assert report(11, all(same), f"tree/query/graph byte-identical: {same}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
