"""Piecewise-flat triangulated surfaces.

A :class:`TriSurface` is a connected simplicial 2-manifold (closed, or with
boundary when explicitly allowed) whose metric is given entirely by edge
lengths.  Curvature lives at the vertices as angle defects; geodesics are
approximated by shortest paths in the edge graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix, diags
from scipy.sparse.csgraph import connected_components, dijkstra

TWO_PI = 2.0 * math.pi
# relative tolerance used when deciding whether two path lengths tie
TIE_RTOL = 1e-12


class MeshError(ValueError):
    pass


class NonManifold(MeshError):
    pass


class DegenerateTriangle(MeshError):
    pass


class Disconnected(MeshError):
    pass


def edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def corner_angle(opposite: float, a: float, b: float) -> float:
    """Angle between sides ``a`` and ``b`` of a triangle, by the law of cosines."""
    c = (a * a + b * b - opposite * opposite) / (2.0 * a * b)
    return math.acos(min(1.0, max(-1.0, c)))


def heron(a: float, b: float, c: float) -> float:
    # Kahan's stable form
    a, b, c = sorted((a, b, c), reverse=True)
    p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * math.sqrt(max(p, 0.0))


class _DSU:
    def __init__(self, items: Iterable):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


@dataclass(frozen=True)
class Path:
    """Edge path given by its vertex sequence."""

    vertices: tuple[int, ...]
    length: float

    @property
    def start(self) -> int:
        return self.vertices[0]

    @property
    def end(self) -> int:
        return self.vertices[-1]

    def edges(self) -> list[tuple[int, int]]:
        vs = self.vertices
        return [edge_key(vs[i], vs[i + 1]) for i in range(len(vs) - 1)]


@dataclass(frozen=True)
class LoopPath:
    """Closed edge path.  ``vertices`` lists each vertex once; the closing
    edge runs from the last entry back to ``vertices[0]`` (the basepoint).
    A single-vertex loop is the constant loop."""

    vertices: tuple[int, ...]
    length: float

    @property
    def basepoint(self) -> int:
        return self.vertices[0]

    @property
    def simple(self) -> bool:
        return len(set(self.vertices)) == len(self.vertices)

    def __len__(self) -> int:
        return len(self.vertices) if len(self.vertices) > 1 else 0

    def edges(self) -> list[tuple[int, int]]:
        vs = self.vertices
        if len(vs) < 2:
            return []
        return [edge_key(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs))]

    def closed_sequence(self) -> tuple[int, ...]:
        return self.vertices + (self.vertices[0],)

    def rebased(self, v: int) -> "LoopPath":
        i = self.vertices.index(v)
        return LoopPath(self.vertices[i:] + self.vertices[:i], self.length)

    def reversed(self) -> "LoopPath":
        vs = self.vertices
        return LoopPath((vs[0],) + tuple(reversed(vs[1:])), self.length)


class TriSurface:
    """Simplicial surface with an edge-length metric.

    Build instances with :func:`build_surface`; the constructor assumes its
    inputs were validated.
    """

    def __init__(self, n_vertices, faces, lengths, coords=None):
        self.n_vertices: int = n_vertices
        self.faces: tuple[tuple[int, int, int], ...] = tuple(tuple(f) for f in faces)
        self.lengths: dict[tuple[int, int], float] = dict(lengths)
        self.coords = None if coords is None else np.asarray(coords, dtype=float)

        edge_faces: dict[tuple[int, int], list[int]] = {}
        vertex_faces: list[list[int]] = [[] for _ in range(n_vertices)]
        for fi, (a, b, c) in enumerate(self.faces):
            for e in (edge_key(a, b), edge_key(b, c), edge_key(c, a)):
                edge_faces.setdefault(e, []).append(fi)
            for v in (a, b, c):
                vertex_faces[v].append(fi)
        self.edges: tuple[tuple[int, int], ...] = tuple(sorted(edge_faces))
        self.edge_index = {e: i for i, e in enumerate(self.edges)}
        self.edge_faces = {e: tuple(fs) for e, fs in edge_faces.items()}
        self.vertex_faces = tuple(tuple(fs) for fs in vertex_faces)
        self.boundary_edges = frozenset(e for e, fs in edge_faces.items() if len(fs) == 1)
        bverts = set()
        for u, v in self.boundary_edges:
            bverts.update((u, v))
        self.boundary_vertices = frozenset(bverts)

        nbrs: list[list[tuple[int, float]]] = [[] for _ in range(n_vertices)]
        for (u, v) in self.edges:
            w = self.lengths[(u, v)]
            nbrs[u].append((v, w))
            nbrs[v].append((u, w))
        self.neighbors = tuple(tuple(sorted(ns)) for ns in nbrs)

        # corner angles: face_angles[fi][k] is the angle at faces[fi][k]
        fa = []
        for (a, b, c) in self.faces:
            lab, lbc, lca = self.length(a, b), self.length(b, c), self.length(c, a)
            fa.append((corner_angle(lbc, lab, lca), corner_angle(lca, lab, lbc), corner_angle(lab, lbc, lca)))
        self.face_angles = tuple(fa)
        sums = np.zeros(n_vertices)
        for f, angs in zip(self.faces, fa):
            for v, ang in zip(f, angs):
                sums[v] += ang
        self.angle_sums = sums
        self.face_areas = np.array([heron(self.length(a, b), self.length(b, c), self.length(c, a))
                                    for (a, b, c) in self.faces])
        self.orientable = _orientable(self.faces, self.edge_faces)
        self._graph = None

    # basic queries -------------------------------------------------------

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    chi = euler_characteristic

    @property
    def is_closed(self) -> bool:
        return not self.boundary_edges

    def length(self, u: int, v: int) -> float:
        return self.lengths[edge_key(u, v)]

    def has_edge(self, u: int, v: int) -> bool:
        return edge_key(u, v) in self.lengths

    def path_length(self, vertices: Sequence[int]) -> float:
        return sum(self.length(vertices[i], vertices[i + 1]) for i in range(len(vertices) - 1))

    def loop(self, vertices: Sequence[int]) -> LoopPath:
        vs = tuple(vertices)
        if len(vs) > 1 and vs[0] == vs[-1]:
            vs = vs[:-1]
        return LoopPath(vs, self.path_length(vs + (vs[0],)) if len(vs) > 1 else 0.0)

    def path(self, vertices: Sequence[int]) -> Path:
        vs = tuple(vertices)
        return Path(vs, self.path_length(vs))

    def max_edge_length(self) -> float:
        return max(self.lengths.values())

    def third_vertex(self, fi: int, u: int, v: int) -> int:
        (w,) = set(self.faces[fi]) - {u, v}
        return w

    # metric ----------------------------------------------------------------

    @property
    def graph(self) -> csr_matrix:
        if self._graph is None:
            rows, cols, vals = [], [], []
            for (u, v), w in self.lengths.items():
                rows += [u, v]
                cols += [v, u]
                vals += [w, w]
            self._graph = csr_matrix((vals, (rows, cols)), shape=(self.n_vertices, self.n_vertices))
        return self._graph

    def distances_from(self, sources, forbidden: Iterable[int] = ()) -> np.ndarray:
        g = self.graph
        forbidden = list(forbidden)
        if forbidden:
            g = _without_vertices(g, forbidden)
        return dijkstra(g, directed=False, indices=sources)

    def all_distances(self) -> np.ndarray:
        return dijkstra(self.graph, directed=False)

    def shortest_path(self, s: int, t: int) -> Path:
        """Minimal-length edge path; ties go to the lexicographically
        smallest vertex sequence."""
        self._check_vertex(s)
        self._check_vertex(t)
        if s == t:
            return Path((s,), 0.0)
        dt = self.distances_from(t)
        if not np.isfinite(dt[s]):
            raise Disconnected(f"no path from {s} to {t}")
        seq = lex_walk(self.neighbors, dt, s, t)
        return self.path(seq)

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n_vertices:
            raise IndexError(f"vertex {v} out of range")

    # curvature --------------------------------------------------------------

    def angle_defect(self, v: int) -> float:
        """``2π`` minus the cone angle at ``v`` (interior vertices)."""
        return TWO_PI - float(self.angle_sums[v])

    def turning_angle(self, v: int) -> float:
        """``π`` minus the interior angle at boundary vertex ``v``."""
        return math.pi - float(self.angle_sums[v])

    def area(self) -> float:
        return float(self.face_areas.sum())

    def mixed_area(self, v: int) -> float:
        return float(self.face_areas[list(self.vertex_faces[v])].sum()) / 3.0

    # local combinatorics ------------------------------------------------------

    def fan(self, v: int) -> tuple[tuple[int, ...], bool]:
        """Neighbours of ``v`` in rotational order.

        Returns ``(order, closed)``.  For interior vertices the order is
        cyclic and starts at the smallest neighbour, continuing towards the
        smaller of its two fan-neighbours; for boundary vertices it is the
        path between the two boundary neighbours, starting at the smaller.
        """
        link: dict[int, list[int]] = {}
        for fi in self.vertex_faces[v]:
            a, b = [w for w in self.faces[fi] if w != v]
            link.setdefault(a, []).append(b)
            link.setdefault(b, []).append(a)
        ends = sorted(w for w, ns in link.items() if len(ns) == 1)
        closed = not ends
        start = min(link) if closed else ends[0]
        order = [start]
        prev, cur = None, start
        while True:
            nxt = sorted(w for w in link[cur] if w != prev)
            if not nxt or (closed and nxt[0] == start and len(order) == len(link)):
                break
            if len(order) >= len(link):
                raise NonManifold(f"vertex {v} link is not a path or cycle")
            prev, cur = cur, nxt[0]
            order.append(cur)
        return tuple(order), closed


def _orientable(faces, edge_faces) -> bool:
    # propagate a consistent orientation; adjacent faces must traverse
    # their shared edge in opposite directions
    sign = [0] * len(faces)
    directed = []
    for f in faces:
        a, b, c = f
        directed.append({(a, b), (b, c), (c, a)})
    for seed in range(len(faces)):
        if sign[seed]:
            continue
        sign[seed] = 1
        stack = [seed]
        while stack:
            fi = stack.pop()
            a, b, c = faces[fi]
            for u, v in ((a, b), (b, c), (c, a)):
                for fj in edge_faces[edge_key(u, v)]:
                    if fj == fi:
                        continue
                    same_dir = (u, v) in directed[fj]
                    want = -sign[fi] if same_dir else sign[fi]
                    if sign[fj] == 0:
                        sign[fj] = want
                        stack.append(fj)
                    elif sign[fj] != want:
                        return False
    return True


def _without_vertices(g: csr_matrix, forbidden: list[int]) -> csr_matrix:
    keep = np.ones(g.shape[0])
    keep[forbidden] = 0.0
    d = diags(keep)
    g = (d @ g @ d).tocsr()
    g.eliminate_zeros()
    return g


def lex_walk(neighbors, dist_to_target, s: int, t: int) -> list[int]:
    """Walk from ``s`` to ``t`` along shortest-path edges, always stepping to
    the smallest admissible neighbour.  This yields the lexicographically
    smallest among the shortest vertex sequences."""
    seq = [s]
    cur = s
    guard = len(dist_to_target) + 1
    while cur != t:
        dc = dist_to_target[cur]
        tol = TIE_RTOL * max(1.0, dc)
        for w, wt in neighbors[cur]:
            if abs(wt + dist_to_target[w] - dc) <= tol and dist_to_target[w] < dc:
                cur = w
                break
        else:
            raise RuntimeError("shortest-path tree is inconsistent")
        seq.append(cur)
        guard -= 1
        if guard < 0:
            raise RuntimeError("lexicographic walk did not terminate")
    return seq


def build_surface(faces, lengths, *, coords=None, allow_boundary: bool = False,
                  n_vertices: int | None = None) -> TriSurface:
    """Validate ``faces``/``lengths`` and return a :class:`TriSurface`.

    ``lengths`` maps vertex pairs (either order) to positive reals.  Raises
    :class:`NonManifold`, :class:`DegenerateTriangle` or :class:`Disconnected`.
    """
    faces = [tuple(int(x) for x in f) for f in faces]
    if not faces:
        raise NonManifold("no faces")
    used = sorted({v for f in faces for v in f})
    nv = n_vertices if n_vertices is not None else used[-1] + 1
    if used != list(range(nv)):
        raise NonManifold("vertex ids must be 0..V-1 and every vertex must lie on a face")
    for f in faces:
        if len(f) != 3 or len(set(f)) != 3:
            raise NonManifold(f"bad face {f}")

    lens: dict[tuple[int, int], float] = {}
    for (u, v), w in _items(lengths):
        k = edge_key(int(u), int(v))
        w = float(w)
        if not (w > 0.0 and math.isfinite(w)):
            raise DegenerateTriangle(f"edge {k} has non-positive length {w}")
        lens[k] = w

    count: dict[tuple[int, int], int] = {}
    seen_faces = set()
    for f in faces:
        key = tuple(sorted(f))
        if key in seen_faces:
            raise NonManifold(f"duplicate face {f}")
        seen_faces.add(key)
        a, b, c = f
        for e in (edge_key(a, b), edge_key(b, c), edge_key(c, a)):
            if e not in lens:
                raise MeshError(f"missing length for edge {e}")
            count[e] = count.get(e, 0) + 1
        x, y, z = lens[edge_key(a, b)], lens[edge_key(b, c)], lens[edge_key(c, a)]
        if not (x < y + z and y < x + z and z < x + y):
            raise DegenerateTriangle(f"face {f} violates the triangle inequality ({x}, {y}, {z})")
    for e, k in count.items():
        if k > 2 or (k == 1 and not allow_boundary):
            raise NonManifold(f"edge {e} lies on {k} faces")
    extra = set(lens) - set(count)
    if extra:
        raise MeshError(f"lengths given for non-edges {sorted(extra)[:3]}")

    # vertex links must be a single fan
    vf: list[list[int]] = [[] for _ in range(nv)]
    for fi, f in enumerate(faces):
        for v in f:
            vf[v].append(fi)
    for v in range(nv):
        dsu = _DSU(vf[v])
        by_edge: dict[int, list[int]] = {}
        for fi in vf[v]:
            for w in faces[fi]:
                if w != v:
                    by_edge.setdefault(w, []).append(fi)
        for fs in by_edge.values():
            for fj in fs[1:]:
                dsu.union(fs[0], fj)
        if len({dsu.find(fi) for fi in vf[v]}) != 1:
            raise NonManifold(f"vertex {v} is pinched")

    rows = [u for (u, v) in count] + [v for (u, v) in count]
    cols = [v for (u, v) in count] + [u for (u, v) in count]
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(nv, nv))
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp != 1:
        raise Disconnected(f"surface has {ncomp} components")
    return TriSurface(nv, faces, lens, coords)


def _items(lengths):
    if isinstance(lengths, Mapping):
        return lengths.items()
    return ((tuple(e[:2]), e[2]) for e in lengths)


def shortest_path(surface: TriSurface, s: int, t: int) -> Path:
    return surface.shortest_path(s, t)


def angle_defect(surface: TriSurface, v: int) -> float:
    return surface.angle_defect(v)


def area(surface: TriSurface) -> float:
    return surface.area()


def _layout(lab: float, lbc: float, lca: float):
    # A at the origin, B on the x-axis
    ax = 0.0
    bx = lab
    cx = (lab * lab + lca * lca - lbc * lbc) / (2.0 * lab)
    cy = math.sqrt(max(lca * lca - cx * cx, 0.0))
    return np.array([ax, 0.0]), np.array([bx, 0.0]), np.array([cx, cy])


def steiner_refine(surface: TriSurface, k: int) -> TriSurface:
    """Subdivide every edge into ``k`` equal parts and every face into
    ``k**2`` flat sub-triangles laid out in the plane of the face.

    Original vertices keep their ids; new vertices follow.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return surface
    nv = surface.n_vertices
    edge_pts: dict[tuple[int, int], list[int]] = {}
    for (u, v) in surface.edges:
        edge_pts[(u, v)] = [nv + j for j in range(k - 1)]
        nv += k - 1

    def on_edge(u: int, v: int, j: int) -> int:
        # j-th of k steps from u towards v
        if j == 0:
            return u
        if j == k:
            return v
        if u < v:
            return edge_pts[(u, v)][j - 1]
        return edge_pts[(v, u)][k - j - 1]

    faces: list[tuple[int, int, int]] = []
    lengths: dict[tuple[int, int], float] = {}
    for (a, b, c) in surface.faces:
        A, B, C = _layout(surface.length(a, b), surface.length(b, c), surface.length(c, a))
        ids: dict[tuple[int, int], int] = {}
        pos: dict[tuple[int, int], np.ndarray] = {}
        for i in range(k + 1):
            for j in range(k + 1 - i):
                # barycentric: i steps toward B, j steps toward C
                pos[(i, j)] = A + (i / k) * (B - A) + (j / k) * (C - A)
                if j == 0:
                    ids[(i, j)] = on_edge(a, b, i)
                elif i == 0:
                    ids[(i, j)] = on_edge(a, c, j)
                elif i + j == k:
                    ids[(i, j)] = on_edge(b, c, j)
                else:
                    ids[(i, j)] = nv
                    nv += 1
        for i in range(k):
            for j in range(k - i):
                tris = [((i, j), (i + 1, j), (i, j + 1))]
                if i + j + 1 < k:
                    tris.append(((i + 1, j), (i + 1, j + 1), (i, j + 1)))
                for t in tris:
                    faces.append(tuple(ids[p] for p in t))
                    for p, q in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                        e = edge_key(ids[p], ids[q])
                        lengths[e] = float(np.linalg.norm(pos[p] - pos[q]))
    # subdivided original edges get their exact fraction
    for (u, v) in surface.edges:
        w = surface.length(u, v) / k
        for j in range(k):
            lengths[edge_key(on_edge(u, v, j), on_edge(u, v, j + 1))] = w
    return build_surface(faces, lengths, allow_boundary=not surface.is_closed, n_vertices=nv)


# mesh text format ------------------------------------------------------------

def dumps(surface: TriSurface) -> str:
    lines = [f"SURF {surface.n_vertices} {surface.n_faces}"]
    for v in range(surface.n_vertices):
        if surface.coords is not None:
            x, y, z = surface.coords[v]
            lines.append(f"{v} {float(x)!r} {float(y)!r} {float(z)!r}")
        else:
            lines.append(f"{v}")
    for (a, b, c) in surface.faces:
        lines.append(f"f {a} {b} {c}")
    for (u, v) in surface.edges:
        lines.append(f"l {u} {v} {float(surface.lengths[(u, v)])!r}")
    return "\n".join(lines) + "\n"


def loads(text: str, *, allow_boundary: bool = False) -> TriSurface:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or rows[0][0] != "SURF":
        raise MeshError("missing SURF header")
    nv, nf = int(rows[0][1]), int(rows[0][2])
    vrows = rows[1:1 + nv]
    coords = None
    if vrows and all(len(r) == 4 for r in vrows):
        coords = [[float(x) for x in r[1:]] for r in vrows]
    faces, lengths = [], {}
    for r in rows[1 + nv:]:
        if r[0] == "f":
            faces.append((int(r[1]), int(r[2]), int(r[3])))
        elif r[0] == "l":
            lengths[(int(r[1]), int(r[2]))] = float(r[3])
        else:
            raise MeshError(f"unknown record {r[0]!r}")
    if len(faces) != nf:
        raise MeshError(f"header says {nf} faces, found {len(faces)}")
    return build_surface(faces, lengths, coords=coords, allow_boundary=allow_boundary, n_vertices=nv)


def dump(surface: TriSurface, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(surface))


def load(path, **kw) -> TriSurface:
    with open(path) as fh:
        return loads(fh.read(), **kw)
