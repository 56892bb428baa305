"""Parametric surface generators.

Every generator returns a validated :class:`~collapse_lab.mesh.TriSurface`
whose edge lengths are computed from an explicit flat or embedded model and
then treated as exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import MeshError, TriSurface, build_surface, edge_key


class SelfIntersectingSpec(MeshError):
    """Parameters for which the generator's model degenerates."""


class CoarseFoldMesh(MeshError):
    """Edges near the fillet are longer than the requested fraction of ``r``."""


@dataclass(frozen=True)
class FamilySpec:
    family: str
    params: dict = field(default_factory=dict)
    n: int = 16
    m: int = 16
    k: int = 1

    def __post_init__(self):
        if self.family not in GENERATORS:
            raise ValueError(f"unknown family {self.family!r}")
        if self.n < 3 or self.m < 3:
            raise ValueError("resolution must be at least 3")
        if self.k < 1:
            raise ValueError("Steiner level must be >= 1")

    def key(self) -> str:
        ps = ",".join(f"{k}={self.params[k]!r}" for k in sorted(self.params))
        return f"{self.family}({ps};n={self.n},m={self.m},k={self.k})"

    def build(self) -> TriSurface:
        from .mesh import steiner_refine

        surf = GENERATORS[self.family](**self.params, n=self.n, m=self.m)
        return steiner_refine(surf, self.k)


def _grid(n: int, m: int, dx: float, dy: float, wrap_top):
    """Quad grid on ``n x m`` vertices with periodic x and a top-row
    identification ``wrap_top(i) -> i'`` (vertex ``(i, m)`` is ``(i', 0)``)."""

    def vid(i, j):
        if j == m:
            return wrap_top(i % n)
        return j * n + (i % n)

    diag = math.hypot(dx, dy)
    faces, lengths = [], {}
    for j in range(m):
        for i in range(n):
            v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            faces += [(v00, v10, v11), (v00, v11, v01)]
            lengths[edge_key(v00, v10)] = dx
            lengths[edge_key(v01, v11)] = dx
            lengths[edge_key(v00, v01)] = dy
            lengths[edge_key(v10, v11)] = dy
            lengths[edge_key(v00, v11)] = diag
    coords = [(i * dx, j * dy, 0.0) for j in range(m) for i in range(n)]
    return faces, lengths, coords


def flat_torus(a: float, b: float, n: int, m: int) -> TriSurface:
    """Flat ``a x b`` torus on an ``n x m`` grid; vertex ``(i, j)`` has id
    ``j*n + i`` and sits at ``(i*a/n, j*b/m)``."""
    if a <= 0 or b <= 0:
        raise ValueError("side lengths must be positive")
    faces, lengths, coords = _grid(n, m, a / n, b / m, lambda i: i)
    return build_surface(faces, lengths, coords=coords)


def flat_klein_bottle(eps: float, n: int, m: int) -> TriSurface:
    """Flat Klein bottle ``R^2 / <(x,y)->(x+2,y), (x,y)->(-x,y+eps)>``.

    The fundamental domain ``[-1, 1) x [0, eps)`` is cut into ``n x m``
    cells (``n`` even so that ``x = 0`` and ``x = 1`` are grid lines).  Vertex
    ``(i, j)`` has id ``j*n + i`` and sits at ``x = -1 + 2i/n``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if n % 2:
        raise ValueError("n must be even")
    faces, lengths, coords = _grid(n, m, 2.0 / n, eps / m, lambda i: (n - i) % n)
    coords = [(x - 1.0, y, z) for (x, y, z) in coords]
    return build_surface(faces, lengths, coords=coords)


def klein_loop_vertices(n: int, m: int, x: float) -> list[int]:
    """Vertex ids of the vertical loop ``{x} x [0, eps)`` (x = 0 or 1)."""
    i = round((x + 1.0) * n / 2.0) % n
    return [j * n + i for j in range(m)]


def _from_points(faces, pts) -> TriSurface:
    pts = np.asarray(pts, dtype=float)
    lengths = {}
    for f in faces:
        for u, v in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            lengths[edge_key(u, v)] = float(np.linalg.norm(pts[u] - pts[v]))
    return build_surface(faces, lengths, coords=pts)


def tetrahedron() -> TriSurface:
    pts = [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]
    pts = np.array(pts, dtype=float) / math.sqrt(8.0)  # unit edges
    return _from_points([(0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2)], pts)


def octahedron() -> TriSurface:
    pts = [(1, 0, 0), (0, 1, 0), (-1, 0, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    faces = []
    for i in range(4):
        j = (i + 1) % 4
        faces += [(i, j, 4), (j, i, 5)]
    return _from_points(faces, pts)


def icosahedron() -> TriSurface:
    g = (1 + math.sqrt(5)) / 2
    pts = [(-1, g, 0), (1, g, 0), (-1, -g, 0), (1, -g, 0),
           (0, -1, g), (0, 1, g), (0, -1, -g), (0, 1, -g),
           (g, 0, -1), (g, 0, 1), (-g, 0, -1), (-g, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    pts = np.array(pts, dtype=float) / 2.0  # unit edges
    return _from_points(faces, pts)


def cube() -> TriSurface:
    """Unit cube, each square face split along a diagonal."""
    pts = [(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)]
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    faces = []
    for a, b, c, d in quads:
        faces += [(a, b, c), (a, c, d)]
    return _from_points(faces, pts)


def _finger_angles(n: int, sx: float, sy: float) -> list[float]:
    nq = 4 * max(1, math.ceil(n / 4))
    phi = math.atan2(sy, sx)
    corners = [phi, math.pi - phi, math.pi + phi, 2 * math.pi - phi]
    angs = [2 * math.pi * j / nq for j in range(nq)]
    angs = [a for a in angs if min(abs(a - c) for c in corners) > 1e-9]
    return sorted(angs + corners)


def fold_step_ratio(surface: TriSurface, r: float) -> float:
    """Longest edge inside the fillet (height at most ``r``, radius at most
    ``2r``) divided by ``r``."""
    xyz = np.asarray(surface.coords)
    near = (xyz[:, 2] <= r * (1 + 1e-9)) & (np.hypot(xyz[:, 0], xyz[:, 1]) <= 2 * r * (1 + 1e-9))
    steps = [w for (u, v), w in surface.lengths.items() if near[u] and near[v]]
    return max(steps) / r if steps else 0.0


def finger_torus(base_size: float, finger_len: float, r: float, n: int, m: int,
                 aspect: float = 1.1, max_fold_step: float | None = None) -> TriSurface:
    """Flat torus with a long finger.

    The base is a flat ``base_size x aspect*base_size`` torus with a round
    hole of radius ``2r`` centred in its fundamental rectangle.  A surface of
    revolution is glued into the hole: a quarter-circle fillet (negatively
    curved) turns the plane into a tube of radius ``r`` and length
    ``finger_len``, closed by a hemispherical cap.  ``n`` sets the angular
    resolution (rounded up to a multiple of 4, plus the rectangle corners),
    ``m`` the number of rings along the tube.

    Vertex 0 is the corner of the rectangle, where the two shortest basis
    loops (the rectangle sides) cross.  With ``max_fold_step`` the generator
    refuses meshes whose fillet edges exceed that multiple of ``r``.
    """
    sx, sy = base_size, aspect * base_size
    rho0, rho1 = 2.0 * r, r
    if r <= 0 or base_size <= 0 or finger_len < 0:
        raise ValueError("sizes must be positive")
    if n < 12 or m < 1:
        # coarser angular grids identify outer-ring vertices into non-simplicial stars
        raise ValueError("finger_torus needs n >= 12 and m >= 1")
    if rho0 >= 0.5 * min(sx, sy) * 0.95:
        raise SelfIntersectingSpec("hole does not fit in the base rectangle")
    angs = _finger_angles(n, sx, sy)
    na = len(angs)
    nr = max(3, n // 8)
    nf = max(3, n // 8)
    nc = max(3, n // 8)
    phi = math.atan2(sy, sx)

    def ray_hit(a):
        c, s_ = math.cos(a), math.sin(a)
        tx = (sx / 2) / abs(c) if abs(c) > 1e-15 else math.inf
        ty = (sy / 2) / abs(s_) if abs(s_) > 1e-15 else math.inf
        t = min(tx, ty)
        return np.array([t * c, t * s_])

    def find_angle(a):
        a %= 2 * math.pi
        j = min(range(na), key=lambda k: min(abs(angs[k] - a), 2 * math.pi - abs(angs[k] - a)))
        return j

    corner_js = {find_angle(c) for c in (phi, math.pi - phi, math.pi + phi, -phi)}

    def outer_rep(j):
        if j in corner_js:
            return ("corner",)
        a = angs[j]
        c, s_ = math.cos(a), math.sin(a)
        if abs(c) * sy > abs(s_) * sx:  # left/right sides
            return ("outer", j if c > 0 else find_angle(math.pi - a))
        return ("outer", j if s_ > 0 else find_angle(-a))

    # profile of the surface of revolution, from the hole rim to the apex
    rf = rho0 - rho1
    prof = []
    for k in range(nf + 1):
        ang = -math.pi / 2 - (math.pi / 2) * k / nf
        prof.append((rho1 + rf + rf * math.cos(ang), rf + rf * math.sin(ang)))
    prof[0] = (rho0, 0.0)
    prof[-1] = (rho1, rf)
    if finger_len > 0:
        for k in range(1, m + 1):
            prof.append((rho1, rf + finger_len * k / m))
    ztop = prof[-1][1]
    for k in range(1, nc):
        ang = (math.pi / 2) * k / nc
        prof.append((rho1 * math.cos(ang), ztop + rho1 * math.sin(ang)))
    apex_pt = np.array([0.0, 0.0, ztop + rho1])

    ids: dict = {}
    pts: list = []

    def vid(key, pt):
        if key not in ids:
            ids[key] = len(pts)
            pts.append(np.asarray(pt, dtype=float))
        return ids[key]

    grid: dict[tuple[int, int], int] = {}
    corner_pt = np.array([sx / 2 * math.cos(phi) / abs(math.cos(phi)), sy / 2, 0.0])
    vid(("corner",), corner_pt)
    for j in range(na):
        rep = outer_rep(j)
        hit = ray_hit(angs[j])
        grid[(nr, j)] = vid(rep, (hit[0], hit[1], 0.0))
    pos3 = {}
    for i in range(nr, -1, -1):
        lam = i / nr
        for j in range(na):
            a = angs[j]
            inner = rho0 * np.array([math.cos(a), math.sin(a)])
            xy = (1 - lam) * inner + lam * ray_hit(a)
            pos3[(i, j)] = np.array([xy[0], xy[1], 0.0])
            if i < nr:
                grid[(i, j)] = vid(("base", i, j), pos3[(i, j)])
    # finger rings: ring k of the profile is base ring "-k"
    for k in range(1, len(prof)):
        rho, z = prof[k]
        for j in range(na):
            a = angs[j]
            pos3[(-k, j)] = np.array([rho * math.cos(a), rho * math.sin(a), z])
            grid[(-k, j)] = vid(("fin", k, j), pos3[(-k, j)])
    apex = vid(("apex",), apex_pt)

    faces, lengths = [], {}

    def add(tri, p3):
        faces.append(tri)
        for x, y, px, py in ((tri[0], tri[1], p3[0], p3[1]), (tri[1], tri[2], p3[1], p3[2]),
                             (tri[2], tri[0], p3[2], p3[0])):
            lengths[edge_key(x, y)] = float(np.linalg.norm(px - py))

    rings = list(range(-(len(prof) - 1), nr + 1))
    for lo, hi in zip(rings, rings[1:]):
        for j in range(na):
            j2 = (j + 1) % na
            v00, v01 = grid[(lo, j)], grid[(lo, j2)]
            v10, v11 = grid[(hi, j)], grid[(hi, j2)]
            p00, p01, p10, p11 = pos3[(lo, j)], pos3[(lo, j2)], pos3[(hi, j)], pos3[(hi, j2)]
            add((v00, v10, v11), (p00, p10, p11))
            add((v00, v11, v01), (p00, p11, p01))
    top = rings[0]
    for j in range(na):
        j2 = (j + 1) % na
        add((grid[(top, j2)], grid[(top, j)], apex), (pos3[(top, j2)], pos3[(top, j)], apex_pt))
    surf = build_surface(faces, lengths, coords=np.array(pts))
    if max_fold_step is not None:
        ratio = fold_step_ratio(surf, r)
        if ratio > max_fold_step:
            raise CoarseFoldMesh(f"fillet edges reach {ratio:.3g} r > {max_fold_step} r; raise n")
    return surf


def folded_torus(t: float, r: float, n: int, m: int, finger_len: float = 1.0,
                 max_fold_step: float | None = None) -> TriSurface:
    """Torus approaching a segment as ``t -> 1``.

    The handle (base torus of side ``5d``) and the finger radius ``d`` both
    shrink as ``d = r (1 - t)`` while the finger length stays fixed, so the
    surface Gromov-Hausdorff-approaches a segment of length about
    ``finger_len`` and the fillet curvature blows up like ``-1/d**2``.
    """
    if not 0.0 <= t < 1.0:
        raise ValueError("t must lie in [0, 1)")
    if r <= 0:
        raise ValueError("r must be positive")
    d = r * (1.0 - t)
    return finger_torus(5.0 * d, finger_len, d, n, m, max_fold_step=max_fold_step)


GENERATORS = {
    "flat_torus": flat_torus,
    "flat_klein": flat_klein_bottle,
    "folded_torus": folded_torus,
    "finger_torus": finger_torus,
}
