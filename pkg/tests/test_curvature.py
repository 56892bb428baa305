import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collapse_lab.curvature import (INCONCLUSIVE, VIOLATED, NoBoundary, gauss_bonnet_region,
                                    min_curvature_density, noncollapse_witness, total_curvature)
from collapse_lab.families import cube, flat_klein_bottle, flat_torus, folded_torus, icosahedron, octahedron
from collapse_lab.homology import shortest_basis
from collapse_lab.mesh import build_surface
from collapse_lab.surgery import cut_along, split_along_loop


def _scaled(s, lam):
    return build_surface(s.faces, {e: lam * w for e, w in s.lengths.items()}, allow_boundary=not s.is_closed)


def _corner_angles(s):
    """Angle sums recomputed from edge lengths with the law of cosines."""
    out = np.zeros(s.n_vertices)
    for f in s.faces:
        for k in range(3):
            v, a, b = f[k], f[(k + 1) % 3], f[(k + 2) % 3]
            x, y, z = s.length(v, a), s.length(v, b), s.length(a, b)
            out[v] += math.acos((x * x + y * y - z * z) / (2 * x * y))
    return out


@pytest.mark.parametrize("make", [cube, icosahedron, lambda: folded_torus(0.9, 0.05, 16, 8)])
def test_angle_sums_match_law_of_cosines(make):
    s = make()
    assert np.allclose(s.angle_sums, _corner_angles(s), atol=1e-12)


def test_total_curvature_closed():
    assert total_curvature(icosahedron()) == pytest.approx(4 * math.pi, abs=1e-12)
    assert total_curvature(flat_klein_bottle(0.2, 8, 4)) == pytest.approx(0.0, abs=1e-12)


def test_icosahedron_density_closed_form():
    dens, v = min_curvature_density(icosahedron())
    # defect pi/3 over a third of five unit triangles
    assert dens == pytest.approx(4 * math.pi / (5 * math.sqrt(3)), rel=1e-12)
    assert v == 0


def test_octahedron_hemisphere_accounting():
    o = octahedron()
    antipode = next(v for v in range(1, 6) if all(w != v for w, _ in o.neighbors[0]))
    ring = [v for v in range(6) if v not in (0, antipode)]
    cyc = [ring[0]]
    while len(cyc) < 4:
        cyc.append(next(w for w, _ in o.neighbors[cyc[-1]] if w in ring and w not in cyc))
    for r in split_along_loop(o, o.loop(cyc)):
        rep = gauss_bonnet_region(r)
        assert rep.interior_sum == pytest.approx(2 * math.pi / 3, abs=1e-12)
        assert rep.turning_sum == pytest.approx(4 * math.pi / 3, abs=1e-12)
        assert all(t == pytest.approx(math.pi / 3, abs=1e-12) for t in rep.turning.values())
        assert rep.residual == pytest.approx(0.0, abs=1e-12)


def test_flat_square_disk_turns_at_corners():
    t = flat_torus(1.0, 1.0, 6, 6)
    b = shortest_basis(t)
    disk = cut_along(t, b[0], b[1])
    rep = gauss_bonnet_region(disk.region, disk.corners[0])
    assert rep.interior_sum == pytest.approx(0.0, abs=1e-12)
    assert rep.turning_sum == pytest.approx(2 * math.pi, abs=1e-12)
    assert sorted(rep.turning[c] for c in disk.corners) == pytest.approx([math.pi / 2] * 4, abs=1e-12)
    assert rep.basepoint_turning == pytest.approx(math.pi / 2, abs=1e-12)
    assert rep.other_turning(disk.corners[0]) == pytest.approx(3 * math.pi / 2, abs=1e-12)
    d = rep.to_dict()
    assert d["residual"] == rep.residual


def test_closed_region_rejected():
    with pytest.raises(NoBoundary):
        gauss_bonnet_region(cube())


def test_density_without_interior_vertices():
    s = build_surface([(0, 1, 2)], {(0, 1): 1.0, (1, 2): 1.0, (0, 2): 1.0}, allow_boundary=True)
    assert min_curvature_density(s) == (math.inf, None)


@given(st.floats(0.1, 10.0))
def test_density_scales_inverse_square(lam):
    s = folded_torus(0.5, 0.05, 16, 8)
    d0, _ = min_curvature_density(s)
    d1, _ = min_curvature_density(_scaled(s, lam))
    assert d1 == pytest.approx(d0 / lam ** 2, rel=1e-9)


@given(st.integers(0, 5), st.sampled_from(["torus", "klein"]))
def test_gauss_bonnet_on_split_regions(j, kind):
    n = 6
    s = flat_torus(1.0, 1.3, n, n) if kind == "torus" else flat_klein_bottle(0.3, n, 6)
    row = [j * n + i for i in range(n)]
    for r in split_along_loop(s, s.loop(row)):
        rep = gauss_bonnet_region(r)
        assert abs(rep.residual) < 1e-8 * r.surface.n_vertices


def test_witness_inconclusive_without_region():
    v = noncollapse_witness(flat_torus(1.0, 1.0, 4, 4), 0.1, 1.0, None)
    assert v.verdict == INCONCLUSIVE and v.reasons == ("no separating loop",)
    assert v.length_slack == pytest.approx(1.0 - 5.2)


def test_witness_on_folded_torus(folded_pipeline):
    s, _, sep = folded_pipeline
    (bp,) = sep.M.copies_of(sep.p)
    v = noncollapse_witness(s, 0.01, 1.0, sep.M, bp)
    assert v.verdict == VIOLATED, v.reasons
    assert v.interior_sum <= -math.pi + v.theta
    assert v.density_bound < -1 and v.min_density <= v.density_bound
    # a fat GH bound leaves the length step unsatisfied
    w = noncollapse_witness(s, 1.0, 1.0, sep.M, bp)
    assert w.verdict == INCONCLUSIVE and "segment not long enough" in w.reasons
    assert set(w.to_dict()) >= {"verdict", "theta", "reasons"}
