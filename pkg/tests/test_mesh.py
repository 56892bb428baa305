import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collapse_lab import mesh
from collapse_lab.families import cube, flat_klein_bottle, flat_torus, icosahedron, octahedron, tetrahedron
from collapse_lab.mesh import (DegenerateTriangle, Disconnected, NonManifold, build_surface, edge_key,
                               steiner_refine)
from oracles import nx_distances, orientable_by_double_cover

CLOSED = {
    "tetrahedron": (tetrahedron, 2),
    "octahedron": (octahedron, 2),
    "icosahedron": (icosahedron, 2),
    "cube": (cube, 2),
    "torus": (lambda: flat_torus(1.0, 2.0, 6, 5), 0),
    "klein": (lambda: flat_klein_bottle(0.3, 6, 4), 0),
}


def _unit_faces(faces):
    lengths = {}
    for f in faces:
        for i in range(3):
            lengths[edge_key(f[i], f[(i + 1) % 3])] = 1.0
    return lengths


def test_smallest_grid_torus():
    # 3x3 is the smallest grid whose torus identification is simplicial
    s = flat_torus(1.0, 1.0, 3, 3)
    assert (s.n_vertices, s.n_faces) == (9, 18)
    assert s.chi == 0 and s.orientable


def test_two_by_two_grid_is_not_simplicial():
    def v(i, j):
        return (j % 2) * 2 + (i % 2)

    faces = []
    for j in range(2):
        for i in range(2):
            faces += [(v(i, j), v(i + 1, j), v(i + 1, j + 1)), (v(i, j), v(i + 1, j + 1), v(i, j + 1))]
    with pytest.raises(NonManifold):
        build_surface(faces, _unit_faces(faces))


def test_tetrahedron_counts():
    s = tetrahedron()
    assert (s.n_vertices, s.n_edges, s.n_faces) == (4, 6, 4)
    assert s.chi == 2 and s.orientable and s.is_closed


def test_klein_orientability_matches_double_cover():
    s = flat_klein_bottle(0.2, 8, 4)
    assert s.chi == 0
    assert s.orientable is False
    assert orientable_by_double_cover(s.faces) is False
    t = flat_torus(1.0, 2.0, 6, 6)
    assert t.orientable is orientable_by_double_cover(t.faces) is True


def test_nonmanifold_edge_rejected():
    faces = [(0, 1, 2), (0, 1, 3), (0, 1, 4)]
    with pytest.raises(NonManifold):
        build_surface(faces, _unit_faces(faces))


def test_open_surface_rejected_unless_allowed():
    faces = [(0, 1, 2)]
    with pytest.raises(NonManifold):
        build_surface(faces, _unit_faces(faces))
    s = build_surface(faces, _unit_faces(faces), allow_boundary=True)
    assert s.chi == 1


def test_pinched_vertex_rejected():
    # two tetrahedra sharing only vertex 0
    faces = [(0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2),
             (0, 4, 5), (0, 6, 4), (0, 5, 6), (4, 6, 5)]
    with pytest.raises(NonManifold):
        build_surface(faces, _unit_faces(faces))


def test_degenerate_triangle_rejected():
    faces = tetrahedron().faces
    lengths = _unit_faces(faces)
    lengths[edge_key(0, 1)] = 2.0
    with pytest.raises(DegenerateTriangle):
        build_surface(faces, lengths)


def test_disconnected_rejected():
    t = tetrahedron()
    faces = list(t.faces) + [tuple(v + 4 for v in f) for f in t.faces]
    with pytest.raises(Disconnected):
        build_surface(faces, _unit_faces(faces))


@pytest.mark.parametrize("name", sorted(CLOSED))
def test_gauss_bonnet_closed(name):
    make, chi = CLOSED[name]
    s = make()
    total = sum(s.angle_defect(v) for v in range(s.n_vertices))
    assert s.chi == chi
    assert abs(total - 2 * math.pi * chi) < 1e-8 * s.n_vertices


def test_angle_defects_of_solids():
    assert cube().angle_defect(0) == pytest.approx(math.pi / 2, abs=1e-12)
    ico = icosahedron()
    assert all(ico.angle_defect(v) == pytest.approx(math.pi / 3, abs=1e-12) for v in range(12))
    t = flat_torus(1.0, 1.0, 6, 6)
    assert max(abs(t.angle_defect(v)) for v in range(t.n_vertices)) < 1e-12


def test_areas():
    assert flat_torus(1.0, 1.0, 16, 16).area() == pytest.approx(1.0, rel=1e-12)
    assert flat_torus(1.0, 2.0, 8, 8).area() == pytest.approx(2.0, rel=1e-12)
    assert tetrahedron().area() == pytest.approx(math.sqrt(3), rel=1e-12)
    assert mesh.area(cube()) == pytest.approx(6.0, rel=1e-12)


def test_shortest_path_trivial_cases():
    s = tetrahedron()
    p = mesh.shortest_path(s, 2, 2)
    assert p.vertices == (2,) and p.length == 0.0
    p = s.shortest_path(0, 1)
    assert p.vertices == (0, 1) and p.length == pytest.approx(1.0)


def test_shortest_path_lexicographic_tie_break():
    # on the unit square grid both L-shaped paths (and the diagonal variants)
    # tie; the smallest vertex sequence must win every time
    s = flat_torus(1.0, 1.0, 4, 4)
    a = s.shortest_path(0, 6)
    b = s.shortest_path(0, 6)
    assert a == b
    D = nx_distances(s)
    assert a.length == pytest.approx(D[0, 6])


def test_distances_match_networkx(torus_1x2):
    D = torus_1x2.all_distances()
    assert np.allclose(D, nx_distances(torus_1x2), atol=1e-12)


def test_square_corners_after_refinement():
    # Cut the square torus open: the corners of the resulting square are
    # distinct vertices.  Adjacent corners sit one side apart; opposite
    # corners are joined by the grid diagonal.
    from collapse_lab.homology import shortest_basis
    from collapse_lab.surgery import cut_along

    t = steiner_refine(flat_torus(1.0, 1.0001, 16, 16), 2)
    basis = shortest_basis(t)
    disk = cut_along(t, basis[0], basis[1])
    s = disk.surface
    c = list(disk.corners)
    d = sorted(s.distances_from(c[0])[c[1:]])
    assert d[0] == pytest.approx(1.0, rel=0.10)
    assert d[1] == pytest.approx(1.0, rel=0.10)
    diag = d[2]
    assert diag == pytest.approx(math.sqrt(2), rel=0.10) or diag == pytest.approx(2.0, rel=0.10)


@given(st.integers(3, 7), st.integers(3, 7), st.floats(0.5, 3.0), st.floats(0.5, 3.0),
       st.lists(st.integers(0, 10_000), min_size=3, max_size=3))
def test_distance_is_a_metric(n, m, a, b, picks):
    s = flat_torus(a, b, n, m)
    x, y, z = (p % s.n_vertices for p in picks)
    dxy = s.shortest_path(x, y).length
    assert dxy == pytest.approx(s.shortest_path(y, x).length, abs=1e-12)
    assert dxy <= s.shortest_path(x, z).length + s.shortest_path(z, y).length + 1e-12


@given(st.integers(3, 6), st.integers(3, 6), st.floats(0.5, 2.0), st.floats(0.5, 2.0))
def test_flat_torus_properties(n, m, a, b):
    s = flat_torus(a, b, n, m)
    assert s.chi == 0 and s.orientable
    assert s.area() == pytest.approx(a * b, rel=1e-9)
    assert max(abs(s.angle_defect(v)) for v in range(s.n_vertices)) < 1e-9


@given(st.sampled_from(["cube", "octahedron", "torus", "klein"]), st.integers(1, 3))
def test_steiner_refine_invariants(name, k):
    s = CLOSED[name][0]()
    r = steiner_refine(s, k)
    assert r.chi == s.chi
    assert r.area() == pytest.approx(s.area(), rel=1e-9)
    total = sum(r.angle_defect(v) for v in range(r.n_vertices))
    assert total == pytest.approx(sum(s.angle_defect(v) for v in range(s.n_vertices)), abs=1e-8)
    # original vertices keep their ids and curvature; new ones are flat
    for v in range(s.n_vertices):
        assert r.angle_defect(v) == pytest.approx(s.angle_defect(v), abs=1e-9)
    for v in range(s.n_vertices, r.n_vertices):
        assert abs(r.angle_defect(v)) < 1e-9
    # refinement can only shorten graph distances
    Ds = s.all_distances()
    Dr = r.all_distances()[: s.n_vertices, : s.n_vertices]
    assert np.all(Dr <= Ds + 1e-9)


def test_steiner_k1_is_identity():
    s = cube()
    r = steiner_refine(s, 1)
    assert r.n_vertices == s.n_vertices and r.lengths == s.lengths


def test_steiner_cube_k3_total_defect():
    r = steiner_refine(cube(), 3)
    assert sum(r.angle_defect(v) for v in range(r.n_vertices)) == pytest.approx(4 * math.pi, abs=1e-9)


def test_mesh_text_roundtrip(tmp_path):
    s = flat_klein_bottle(0.2, 6, 4)
    path = tmp_path / "k.surf"
    mesh.dump(s, path)
    t = mesh.load(path)
    assert t.faces == s.faces and t.lengths == s.lengths
    assert mesh.loads(mesh.dumps(s)).chi == 0
    assert mesh.dumps(s).splitlines()[0] == f"SURF {s.n_vertices} {s.n_faces}"


def test_mesh_text_rejects_garbage():
    with pytest.raises(ValueError):
        mesh.loads("SURF 3 1\n0\n1\n2\nf 0 1 2\n")
