"""Cutting surfaces along loops and the separating-loop construction.

The pipeline on a torus: take the two shortest basis loops crossing at ``p``,
form the commutator loop, cut the surface open into a disk along the basis
loops, puncture it at the point ``q`` farthest from ``p``, and find the
shortest loop at a corner of the disk that winds around the puncture an odd
number of times.  Mapped back to the surface this loop separates off a disk
containing ``q``.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .homology import HomologyBasis, intersection_points, _wedges, _face_lookup
from .mesh import TIE_RTOL, LoopPath, TriSurface, _DSU, build_surface, edge_key, lex_walk


class SurgeryError(ValueError):
    pass


class BasepointNotShared(SurgeryError):
    pass


class NotSingleCrossing(SurgeryError):
    pass


class CutNotDisk(SurgeryError):
    pass


class PunctureOnBoundary(SurgeryError):
    pass


class NoLoop(SurgeryError):
    pass


class NotSimple(SurgeryError):
    pass


class FingerTooShort(SurgeryError):
    pass


class ConvexityProxyFailed(UserWarning):
    pass


@dataclass(frozen=True)
class Region:
    """A piece of a surface cut open along edges.

    ``vertex_map[i]`` is the original vertex of region vertex ``i``;
    ``face_map[i]`` the original face of region face ``i``.
    """

    surface: TriSurface
    vertex_map: tuple[int, ...]
    face_map: tuple[int, ...]

    def copies_of(self, v: int) -> list[int]:
        return [i for i, w in enumerate(self.vertex_map) if w == v]

    @property
    def chi(self) -> int:
        return self.surface.euler_characteristic


def cut_edges(surface: TriSurface, edges) -> list[Region]:
    """Cut ``surface`` open along ``edges`` and return the resulting pieces.

    At each vertex the incident faces are grouped into wedges separated by
    cut edges; every wedge becomes its own vertex.
    """
    cut = {edge_key(*e) for e in edges}
    copy_of: dict[tuple[int, int], int] = {}
    new_back: list[int] = []
    for v in range(surface.n_vertices):
        fs = surface.vertex_faces[v]
        dsu = _DSU(fs)
        by_nbr: dict[int, list[int]] = {}
        for fi in fs:
            for w in surface.faces[fi]:
                if w != v:
                    by_nbr.setdefault(w, []).append(fi)
        for w, group in by_nbr.items():
            if edge_key(v, w) not in cut and len(group) == 2:
                dsu.union(group[0], group[1])
        roots = sorted({dsu.find(fi) for fi in fs})
        ids = {}
        for r in roots:
            ids[r] = len(new_back)
            new_back.append(v)
        for fi in fs:
            copy_of[(v, fi)] = ids[dsu.find(fi)]

    new_faces = [tuple(copy_of[(v, fi)] for v in f) for fi, f in enumerate(surface.faces)]
    comp = _DSU(range(len(new_faces)))
    owner: dict[tuple[int, int], int] = {}
    for fi, (a, b, c) in enumerate(new_faces):
        for e in (edge_key(a, b), edge_key(b, c), edge_key(c, a)):
            if e in owner:
                comp.union(owner[e], fi)
            else:
                owner[e] = fi
    groups: dict[int, list[int]] = {}
    for fi in range(len(new_faces)):
        groups.setdefault(comp.find(fi), []).append(fi)

    regions = []
    for root in sorted(groups):
        fis = groups[root]
        verts = sorted({v for fi in fis for v in new_faces[fi]})
        local = {v: i for i, v in enumerate(verts)}
        faces = [tuple(local[v] for v in new_faces[fi]) for fi in fis]
        lengths = {}
        for f in faces:
            for x, y in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
                lengths[edge_key(x, y)] = surface.length(new_back[verts[x]], new_back[verts[y]])
        coords = None
        if surface.coords is not None:
            coords = surface.coords[[new_back[v] for v in verts]]
        s = build_surface(faces, lengths, coords=coords, allow_boundary=True, n_vertices=len(verts))
        regions.append(Region(s, tuple(new_back[v] for v in verts), tuple(fis)))
    return regions


def split_along_loop(surface: TriSurface, loop: LoopPath) -> list[Region]:
    """Cut along a simple loop; returns one or two regions."""
    if not loop.simple:
        raise NotSimple("split_along_loop needs a simple loop")
    return cut_edges(surface, loop.edges())


# commutator and cut disk -------------------------------------------------------

def commutator_loop(surface: TriSurface, alpha: LoopPath, beta: LoopPath, p: int) -> LoopPath:
    """The based loop ``alpha * beta * alpha^-1 * beta^-1`` at ``p``.

    Its length is set to ``2|alpha| + 2|beta|``.
    """
    if p not in alpha.vertices or p not in beta.vertices:
        raise BasepointNotShared(f"vertex {p} is not on both loops")
    a, b = alpha.rebased(p), beta.rebased(p)
    seq = list(a.vertices) + list(b.vertices) + list(a.reversed().vertices) + list(b.reversed().vertices)
    seq = [v for i, v in enumerate(seq) if i == 0 or v != seq[i - 1]]
    while len(seq) > 1 and seq[-1] == seq[0]:
        seq.pop()
    return LoopPath(tuple(seq), 2.0 * alpha.length + 2.0 * beta.length)


@dataclass(frozen=True)
class CutDisk:
    """Disk obtained by cutting along two loops crossing once.

    ``word`` lists the boundary segments from a corner as ``(label, sign)``
    pairs; ``corners`` are the disk copies of the crossing point.
    """

    region: Region
    word: tuple[tuple[str, int], ...]
    corners: tuple[int, ...]
    boundary_cycle: tuple[int, ...]
    crossing: int

    @property
    def surface(self) -> TriSurface:
        return self.region.surface

    @property
    def vertex_map(self) -> tuple[int, ...]:
        return self.region.vertex_map

    @property
    def word_string(self) -> str:
        return " ".join(lab if s > 0 else f"{lab}^-1" for lab, s in self.word)

    @property
    def boundary_length(self) -> float:
        cyc = self.boundary_cycle
        return sum(self.surface.length(cyc[i], cyc[(i + 1) % len(cyc)]) for i in range(len(cyc)))


def _boundary_cycle(s: TriSurface) -> list[int]:
    adj: dict[int, list[int]] = {}
    for u, v in s.boundary_edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    start = min(adj)
    cyc = [start]
    prev, cur = None, start
    while True:
        nxt = sorted(w for w in adj[cur] if w != prev)
        w = nxt[0]
        if w == start:
            break
        cyc.append(w)
        prev, cur = cur, w
        if len(cyc) > len(adj):
            raise CutNotDisk("boundary is not a single cycle")
    if len(cyc) != len(adj):
        raise CutNotDisk("boundary has several cycles")
    return cyc


def cut_along(surface: TriSurface, alpha: LoopPath, beta: LoopPath) -> CutDisk:
    """Cut along simple loops ``alpha`` and ``beta`` that meet in exactly one
    vertex, where they cross."""
    if not (alpha.simple and beta.simple):
        raise NotSingleCrossing("loops must be simple")
    shared = set(alpha.vertices) & set(beta.vertices)
    crossings = intersection_points(surface, alpha, beta)
    if len(shared) != 1 or crossings != shared:
        raise NotSingleCrossing(f"loops share {sorted(shared)}, cross at {sorted(crossings)}")
    (p,) = shared
    regions = cut_edges(surface, alpha.edges() + beta.edges())
    if len(regions) != 1 or regions[0].chi != 1:
        raise CutNotDisk("complement of the loops is not a disk")
    reg = regions[0]
    s = reg.surface
    cyc = _boundary_cycle(s)
    back = reg.vertex_map
    corners = tuple(sorted(i for i in range(s.n_vertices) if back[i] == p))

    pos_a = {v: i for i, v in enumerate(alpha.vertices)}
    pos_b = {v: i for i, v in enumerate(beta.vertices)}
    ea, eb = set(alpha.edges()), set(beta.edges())

    def letter(x, y):
        u, v = back[x], back[y]
        if edge_key(u, v) in ea:
            lab, pos = "a", pos_a
        elif edge_key(u, v) in eb:
            lab, pos = "b", pos_b
        else:
            raise CutNotDisk("boundary edge not on the cut loops")
        n = len(pos)
        return lab, 1 if (pos[v] - pos[u]) % n == 1 else -1

    def word_from(start: int, step: int):
        i0 = cyc.index(start)
        seq = [cyc[(i0 + step * k) % len(cyc)] for k in range(len(cyc) + 1)]
        word = []
        for x, y in zip(seq, seq[1:]):
            lt = letter(x, y)
            if not word or word[-1] != lt or x in corners:
                word.append(lt)
        return word

    word = None
    for c in corners:
        for step in (1, -1):
            w = word_from(c, step)
            if w[0] == ("a", 1):
                word = w
                break
        if word:
            break
    if word is None:
        raise CutNotDisk("could not read the boundary word")
    flip_b = next(s_ for lab, s_ in word if lab == "b") < 0
    if flip_b:
        word = [(lab, -s_ if lab == "b" else s_) for lab, s_ in word]
    return CutDisk(reg, tuple(word), corners, tuple(cyc), p)


# puncture search ----------------------------------------------------------------

def farthest_point(surface: TriSurface, p: int) -> tuple[int, float]:
    d = surface.distances_from(p)
    best = float(d.max())
    q = int(np.flatnonzero(d >= best - TIE_RTOL * max(1.0, best))[0])
    return q, float(d[q])


def _cut_path_cocycle(s: TriSurface, q: int) -> tuple[list[int], set[tuple[int, int]]]:
    """Shortest path from ``q`` to the boundary and the edges leaving it on
    one fixed side.  The parity of such edges along a loop avoiding ``q``
    equals its winding parity around ``q``."""
    d = s.distances_from(q)
    bverts = sorted(s.boundary_vertices)
    db = d[bverts]
    b = bverts[int(np.flatnonzero(db <= db.min() + TIE_RTOL * max(1.0, db.min()))[0])]
    path = s.shortest_path(q, b).vertices
    fk = _face_lookup(s)
    onpath = set(path)
    # starting side: the face on edge (q, c1) with the smaller index
    e_faces = sorted(s.edge_faces[edge_key(path[0], path[1])])
    face = e_faces[0]
    omega = set()
    for i in range(1, len(path)):
        v = path[i]
        prev = path[i - 1]
        if i < len(path) - 1:
            nxt = path[i + 1]
            groups = _wedges(s, fk, v, prev, nxt)
            side = 0 if face in groups[0][1] else 1
            left = groups[side][0]
            e_faces = s.edge_faces[edge_key(v, nxt)]
            face = next(f for f in e_faces if f in groups[side][1])
        else:
            order, closed = s.fan(v)
            if closed:
                raise PunctureOnBoundary("cut path does not end on the boundary")
            k = order.index(prev)
            before = set(order[:k])
            fb = {fk[tuple(sorted((v, order[j], order[j + 1])))] for j in range(k)}
            left = before if face in fb else set(order[k + 1:])
        for w in left:
            if w in onpath:
                raise SurgeryError("cut path has a chord; cannot define its side")
            omega.add(edge_key(v, w))
    return list(path), omega


def winding_parity(s: TriSurface, omega: set, loop: LoopPath) -> int:
    return sum(1 for e in loop.edges() if e in omega) & 1


def shortest_noncontractible_punctured(disk, q: int, corner: int) -> LoopPath:
    """Shortest loop at ``corner`` winding an odd number of times around the
    vertex ``q`` of ``disk`` (a :class:`CutDisk` or a disk ``TriSurface``).
    The loop never visits ``q``."""
    s = disk.surface if isinstance(disk, CutDisk) else disk
    if q in s.boundary_vertices:
        raise PunctureOnBoundary(f"vertex {q} is on the boundary")
    if q == corner:
        raise PunctureOnBoundary("puncture coincides with the basepoint")
    path, omega = _cut_path_cocycle(s, q)
    n = s.n_vertices
    rows, cols, vals = [], [], []
    for (u, v), w in s.lengths.items():
        if q in (u, v):
            continue
        h = 1 if (u, v) in omega else 0
        for lab in (0, 1):
            rows += [2 * u + lab, 2 * v + (lab ^ h)]
            cols += [2 * v + (lab ^ h), 2 * u + lab]
            vals += [w, w]
    g = csr_matrix((vals, (rows, cols)), shape=(2 * n, 2 * n))
    dist = dijkstra(g, directed=False, indices=2 * corner)
    if not np.isfinite(dist[2 * corner + 1]):
        raise NoLoop("no loop around the puncture")
    to_target = dist[np.arange(2 * n) ^ 1]

    class _Nbrs:
        def __getitem__(self, node):
            v, lab = divmod(node, 2)
            return [(2 * w + (lab ^ (1 if edge_key(v, w) in omega else 0)), wt)
                    for w, wt in s.neighbors[v] if w != q]

    seq = lex_walk(_Nbrs(), to_target, 2 * corner, 2 * corner + 1)
    loop = s.loop([node // 2 for node in seq[:-1]])
    if not loop.simple:
        loop = _shortest_simple_odd_loop(s, q, corner, path, omega)
        if loop is None:
            raise NotSimple("no simple loop around the puncture")
    assert winding_parity(s, omega, loop) == 1
    return loop


def _dijkstra(adj: dict, src) -> tuple[dict, dict]:
    dist = {src: 0.0}
    pred: dict = {}
    heap = [(0.0, src)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in adj.get(u, ()):
            nd = d + w
            if nd < dist.get(v, math.inf) - 1e-15:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, pred


def _two_disjoint_paths(arcs: dict, s, t):
    """Suurballe: two arc-disjoint s-t paths of minimal total cost in a
    directed graph ``arcs[(u, v)] = cost`` (node-split graphs make them
    vertex-disjoint).  Returns the two node sequences or ``None``."""
    ids: dict = {}
    for (u, v) in arcs:
        ids.setdefault(u, len(ids))
        ids.setdefault(v, len(ids))
    names = {i: n for n, i in ids.items()}
    arcs = {(ids[u], ids[v]): w for (u, v), w in arcs.items()}
    s, t = ids[s], ids[t]
    adj: dict = {}
    for (u, v), w in sorted(arcs.items()):
        adj.setdefault(u, []).append((v, w))
    d1, pred = _dijkstra(adj, s)
    if t not in d1:
        return None
    p1 = [t]
    while p1[-1] != s:
        p1.append(pred[p1[-1]])
    p1.reverse()
    on_p1 = set(zip(p1, p1[1:]))
    radj: dict = {}
    for (u, v), w in sorted(arcs.items()):
        if u not in d1 or v not in d1:
            continue
        if (u, v) in on_p1:
            radj.setdefault(v, []).append((u, 0.0))
        else:
            radj.setdefault(u, []).append((v, max(0.0, w + d1[u] - d1[v])))
    d2, pred2 = _dijkstra(radj, s)
    if t not in d2:
        return None
    p2 = [t]
    while p2[-1] != s:
        p2.append(pred2[p2[-1]])
    p2.reverse()
    used = set(on_p1)
    for u, v in zip(p2, p2[1:]):
        if (v, u) in used:
            used.discard((v, u))
        else:
            used.add((u, v))
    out: dict = {}
    for u, v in sorted(used):
        out.setdefault(u, []).append(v)
    paths = []
    for _ in range(2):
        seq = [s]
        while seq[-1] != t:
            seq.append(out[seq[-1]].pop(0))
        paths.append([names[i] for i in seq])
    return paths


def _shortest_simple_odd_loop(s: TriSurface, q: int, corner: int, path, omega) -> LoopPath | None:
    """Shortest simple loop at ``corner`` crossing the cut path once.

    The disk is slit along the cut path; each slit vertex ``x`` gets a left
    and a right copy, and a simple loop crossing at ``x`` is a pair of
    vertex-disjoint paths from ``corner`` to the two copies.
    """
    slit = set(path[1:])
    left_nbrs = {v: set() for v in slit}
    for (u, w) in omega:
        if u in slit:
            left_nbrs[u].add(w)
        if w in slit:
            left_nbrs[w].add(u)
    idx = {v: i for i, v in enumerate(path)}

    def side(x, y):
        # copy of slit vertex x used by edge (x, y)
        if y in slit and abs(idx[x] - idx[y]) == 1:
            return None
        return "L" if y in left_nbrs[x] else "R"

    base_arcs = {}
    for (u, w), wt in s.lengths.items():
        if q in (u, w):
            continue
        if u in slit and w in slit and abs(idx[u] - idx[w]) == 1:
            for sd in ("L", "R"):
                base_arcs[(((u, sd), "out"), ((w, sd), "in"))] = wt
                base_arcs[(((w, sd), "out"), ((u, sd), "in"))] = wt
            continue
        nu = (u, side(u, w)) if u in slit else (u, None)
        nw = (w, side(w, u)) if w in slit else (w, None)
        base_arcs[((nu, "out"), (nw, "in"))] = wt
        base_arcs[((nw, "out"), (nu, "in"))] = wt
    nodes = {n for arc in base_arcs for n, _ in arc}
    for n in nodes:
        if n[0] != corner:
            base_arcs[((n, "in"), (n, "out"))] = 0.0
    best = None
    if corner in slit:
        # the loop crosses the slit at the corner itself
        adj: dict = {}
        for (u, w), wt in sorted(base_arcs.items()):
            adj.setdefault(u, []).append((w, wt))
        src, dst = ((corner, "L"), "out"), ((corner, "R"), "in")
        dist, pred = _dijkstra(adj, src)
        if dst not in dist:
            return None
        seq = [dst]
        while seq[-1] != src:
            seq.append(pred[seq[-1]])
        verts = [corner] + [n[0][0] for n in reversed(seq[:-1]) if n[1] == "in"][:-1]
        lp = s.loop(verts)
        return lp if lp.simple else None
    src = ((corner, None), "out")
    for x in path[1:]:
        arcs = dict(base_arcs)
        arcs[(((x, "L"), "in"), "T")] = 0.0
        arcs[(((x, "R"), "in"), "T")] = 0.0
        res = _two_disjoint_paths(arcs, src, "T")
        if res is None:
            continue
        p1, p2 = res
        v1 = [n[0][0] for n in p1[:-1] if n[1] == "in"]
        v2 = [n[0][0] for n in p2[:-1] if n[1] == "in"]
        verts = [corner] + v1[:-1] + [x] + list(reversed(v2[:-1]))
        lp = s.loop(verts)
        if not lp.simple:
            continue
        key = (lp.length, x)
        if best is None or key < best[0]:
            best = (key, lp)
    return None if best is None else best[1]


@dataclass(frozen=True)
class SeparatingLoop:
    loop: LoopPath
    disk_part: Region
    M: Region
    sigma: LoopPath
    p: int
    q: int
    dist_pq: float
    cut: CutDisk
    disk_loop: LoopPath
    touches_boundary: bool
    notes: dict = field(default_factory=dict)


def separating_loop(surface: TriSurface, basis: HomologyBasis) -> SeparatingLoop:
    """Separating loop based at the crossing of the first two basis loops."""
    alpha, beta = basis.loops[0], basis.loops[1]
    shared = set(alpha.vertices) & set(beta.vertices)
    if len(shared) != 1:
        raise NotSingleCrossing(f"basis loops share {len(shared)} vertices")
    (p,) = shared
    sigma = commutator_loop(surface, alpha, beta, p)
    q, dpq = farthest_point(surface, p)
    if dpq <= sigma.length:
        raise FingerTooShort(f"dist(p, q) = {dpq:.6g} <= |sigma_p| = {sigma.length:.6g}")
    disk = cut_along(surface, alpha, beta)
    (qd,) = disk.region.copies_of(q)
    corner = disk.corners[0]
    lam_d = shortest_noncontractible_punctured(disk, qd, corner)
    back = disk.vertex_map
    touches = any(v in disk.surface.boundary_vertices for v in lam_d.vertices[1:])
    if touches:
        warnings.warn("separating loop touches the cut boundary", ConvexityProxyFailed)
    lam = LoopPath(tuple(back[v] for v in lam_d.vertices), lam_d.length)
    if not lam.simple:
        raise NotSimple("projected loop is not simple")
    parts = split_along_loop(surface, lam)
    if len(parts) != 2:
        raise SurgeryError(f"loop does not separate ({len(parts)} component)")
    disk_part = next(r for r in parts if q in r.vertex_map)
    M = next(r for r in parts if r is not disk_part)
    return SeparatingLoop(lam, disk_part, M, sigma, p, q, dpq, disk, lam_d, touches)
