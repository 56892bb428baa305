import math
import warnings

import pytest

from collapse_lab.families import flat_klein_bottle, flat_torus, octahedron
from collapse_lab.homology import shortest_basis, z2_class_of
from collapse_lab.mesh import steiner_refine
from collapse_lab.surgery import (BasepointNotShared, ConvexityProxyFailed, FingerTooShort, NotSimple,
                                  NotSingleCrossing, PunctureOnBoundary, commutator_loop, cut_along,
                                  cut_edges, farthest_point, separating_loop,
                                  shortest_noncontractible_punctured, split_along_loop, winding_parity,
                                  _cut_path_cocycle)
from oracles import punctured_loop_oracle


def _disk(N, a=1.0, b=1.0, k=1):
    t = steiner_refine(flat_torus(a, b, N, N), k)
    basis = shortest_basis(t)
    return t, basis, cut_along(t, basis[0], basis[1])


def test_commutator_length_and_basepoint(torus_1x2):
    a, b = shortest_basis(torus_1x2).loops
    (p,) = set(a.vertices) & set(b.vertices)
    sigma = commutator_loop(torus_1x2, a, b, p)
    assert sigma.length == 2 * a.length + 2 * b.length
    assert sigma.basepoint == p
    assert torus_1x2.path_length(sigma.closed_sequence()) == pytest.approx(sigma.length, rel=1e-12)
    assert not z2_class_of(torus_1x2, sigma.vertices)
    other = next(v for v in a.vertices if v not in b.vertices)
    with pytest.raises(BasepointNotShared):
        commutator_loop(torus_1x2, a, b, other)


@pytest.mark.parametrize("N", [3, 4, 8])
def test_cut_disk_word_and_boundary(N):
    t, basis, disk = _disk(N, 1.0, 2.0)
    assert disk.region.chi == 1
    assert disk.word_string == "a b a^-1 b^-1"
    assert disk.boundary_length == pytest.approx(2 * basis.lengths[0] + 2 * basis.lengths[1], rel=1e-12)
    assert len(disk.corners) == 4
    assert all(disk.vertex_map[c] == disk.crossing for c in disk.corners)
    # area is preserved by cutting
    assert disk.surface.area() == pytest.approx(t.area(), rel=1e-12)


def test_cut_requires_single_crossing():
    n = 6
    t = flat_torus(1.0, 1.0, n, n)
    a = t.loop(list(range(n)))
    b = t.loop([3 * n + i for i in range(n)])
    with pytest.raises(NotSingleCrossing):
        cut_along(t, a, b)


def test_split_along_meridian_and_equator():
    n = 6
    t = flat_torus(1.0, 1.0, n, n)
    parts = split_along_loop(t, t.loop(list(range(n))))
    assert [r.chi for r in parts] == [0]
    assert len(parts[0].surface.boundary_vertices) == 2 * n
    o = octahedron()
    # the equator avoids vertex 0 and its antipode
    antipode = next(v for v in range(1, 6) if all(w != v for w, _ in o.neighbors[0]))
    ring = [v for v in range(6) if v not in (0, antipode)]
    cyc = [ring[0]]
    while len(cyc) < 4:
        cyc.append(next(w for w, _ in o.neighbors[cyc[-1]] if w in ring and w not in cyc))
    parts = split_along_loop(o, o.loop(cyc))
    assert sorted(r.chi for r in parts) == [1, 1]
    assert sum(r.surface.area() for r in parts) == pytest.approx(o.area(), rel=1e-12)


def test_split_rejects_nonsimple():
    t = flat_torus(1.0, 1.0, 4, 4)
    with pytest.raises(NotSimple):
        split_along_loop(t, t.loop([0, 1, 5, 1]))


def test_cut_edges_noop():
    t = flat_torus(1.0, 1.0, 4, 4)
    (r,) = cut_edges(t, [])
    assert r.surface.n_vertices == t.n_vertices and r.chi == 0


def test_farthest_point_on_flat_torus():
    t = flat_torus(1.0, 1.0, 8, 8)
    q, d = farthest_point(t, 0)
    # graph metric with one diagonal direction: the antipode is 0.75 away
    assert d == pytest.approx(0.75)
    assert d == t.distances_from(0).max()


def _all_cases(N, b=1.0, k=1):
    t, _, disk = _disk(N, 1.0, b, k)
    s = disk.surface
    inner = [v for v in range(s.n_vertices) if v not in s.boundary_vertices]
    return [(N, b, k, q, c) for q in inner for c in disk.corners]


@pytest.mark.parametrize("N,b,k,q,c", _all_cases(4) + _all_cases(6) + _all_cases(8)[::7]
                         + _all_cases(3, 1.3, 2))
def test_punctured_loop_matches_enumeration(N, b, k, q, c):
    _, _, disk = _disk(N, 1.0, b, k)
    lp = shortest_noncontractible_punctured(disk, q, c)
    want = punctured_loop_oracle(disk.surface, q, c, disk.boundary_length)
    assert lp.length == pytest.approx(want, abs=1e-9)
    assert lp.simple and lp.basepoint == c and q not in lp.vertices


def test_punctured_loop_winds_once_and_separates():
    _, _, disk = _disk(8)
    s = disk.surface
    inner = [v for v in range(s.n_vertices) if v not in s.boundary_vertices]
    q = inner[len(inner) // 2]
    path, omega = _cut_path_cocycle(s, q)
    for c in disk.corners:
        lp = shortest_noncontractible_punctured(disk, q, c)
        assert winding_parity(s, omega, lp) == 1
        # runs along the disk boundary may pinch off extra pieces
        parts = split_along_loop(s, lp)
        assert len(parts) >= 2
        inside = next(r for r in parts if q in r.vertex_map)
        assert inside.chi == 1
        assert set(inside.vertex_map) & set(s.boundary_vertices) <= set(lp.vertices)
    # the disk boundary itself winds once
    assert winding_parity(s, omega, s.loop(list(disk.boundary_cycle))) == 1


def test_punctured_loop_near_boundary_hugs_the_puncture():
    _, _, disk = _disk(8)
    s = disk.surface
    # an interior vertex adjacent to a corner: its link encloses it
    c, q = next((c, w) for c in disk.corners for w, _ in s.neighbors[c] if w not in s.boundary_vertices)
    lp = shortest_noncontractible_punctured(disk, q, c)
    link = 0.0
    for fi in s.vertex_faces[q]:
        x, y = (v for v in s.faces[fi] if v != q)
        link += s.length(x, y)
    assert lp.length <= link + 1e-12


def test_puncture_errors():
    _, _, disk = _disk(4)
    s = disk.surface
    b = next(iter(s.boundary_vertices))
    with pytest.raises(PunctureOnBoundary):
        shortest_noncontractible_punctured(disk, b, disk.corners[0])


def test_finger_too_short_on_flat_torus(torus_1x2):
    with pytest.raises(FingerTooShort):
        separating_loop(torus_1x2, shortest_basis(torus_1x2))


def test_separating_loop_needs_single_crossing():
    k = flat_klein_bottle(0.1, 20, 4)
    with pytest.raises(NotSingleCrossing):
        separating_loop(k, shortest_basis(k))


def test_pipeline_invariants(folded_pipeline):
    s, basis, sep = folded_pipeline
    a, b = basis.loops[0], basis.loops[1]
    assert sep.sigma.length == 2 * a.length + 2 * b.length
    assert sep.dist_pq > sep.sigma.length
    assert sep.loop.simple and sep.q not in sep.loop.vertices
    assert sep.loop.length <= sep.sigma.length
    assert sep.loop.basepoint == sep.p
    assert (sep.disk_part.chi, sep.M.chi) == (1, -1)
    assert sep.disk_part.surface.area() + sep.M.surface.area() == pytest.approx(s.area(), rel=1e-12)
    # the finger tip is far from the loop: beyond half its length from p
    assert sep.dist_pq - sep.loop.length / 2 > 0
    assert s.path_length(sep.loop.closed_sequence()) == pytest.approx(sep.loop.length, rel=1e-12)


def test_pipeline_warning_is_recordable(folded_pipeline):
    s, basis, _ = folded_pipeline
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvexityProxyFailed)
        sep = separating_loop(s, basis)
    assert len(caught) == int(sep.touches_boundary)
    assert math.isfinite(sep.dist_pq)
