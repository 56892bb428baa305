"""First homology with GF(2) coefficients on closed triangulated surfaces.

Classes are coordinate vectors with respect to the generator loops of a
tree-cotree decomposition: every edge carries a bitmask ``h(e)`` and the class
of an edge loop is the XOR of the masks of its edges.  Shortest loops in a
prescribed class are found by Dijkstra on the ``2**r``-sheeted cover whose
sheets are labelled by partial classes.
"""

from __future__ import annotations

import weakref
from collections import deque
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .mesh import TIE_RTOL, LoopPath, TriSurface, edge_key, lex_walk


class ZeroClass(ValueError):
    pass


@dataclass(frozen=True)
class Z2Class:
    bits: int
    rank: int

    def __add__(self, other: "Z2Class") -> "Z2Class":
        if self.rank != other.rank:
            raise ValueError("classes live in different homology groups")
        return Z2Class(self.bits ^ other.bits, self.rank)

    def __bool__(self) -> bool:
        return self.bits != 0

    @property
    def vector(self) -> tuple[int, ...]:
        return tuple((self.bits >> j) & 1 for j in range(self.rank))

    @classmethod
    def from_vector(cls, vec) -> "Z2Class":
        return cls(sum(int(b) << j for j, b in enumerate(vec)), len(vec))


def gf2_rank(rows: list[int]) -> int:
    basis: list[int] = []
    for r in rows:
        for b in basis:
            r = min(r, r ^ b)
        if r:
            basis.append(r)
    return len(basis)


def gf2_inverse(rows: list[int], n: int) -> list[int]:
    """Inverse of an ``n x n`` GF(2) matrix given as row bitmasks."""
    aug = [(rows[i], 1 << i) for i in range(n)]
    for col in range(n):
        piv = next((i for i in range(col, n) if (aug[i][0] >> col) & 1), None)
        if piv is None:
            raise ValueError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        for i in range(n):
            if i != col and (aug[i][0] >> col) & 1:
                aug[i] = (aug[i][0] ^ aug[col][0], aug[i][1] ^ aug[col][1])
    return [aug[i][1] for i in range(n)]


class HomologyData:
    """Tree-cotree decomposition and derived tables for one surface."""

    def __init__(self, surface: TriSurface):
        if not surface.is_closed:
            raise ValueError("homology tables need a closed surface")
        self.surface = surface
        nv = surface.n_vertices

        # primal BFS tree
        parent = [-1] * nv
        seen = [False] * nv
        seen[0] = True
        tree = set()
        q = deque([0])
        while q:
            u = q.popleft()
            for w, _ in surface.neighbors[u]:
                if not seen[w]:
                    seen[w] = True
                    parent[w] = u
                    tree.add(edge_key(u, w))
                    q.append(w)
        self.parent = parent
        depth = [0] * nv
        for v in self._bfs_order():
            if parent[v] >= 0:
                depth[v] = depth[parent[v]] + 1
        self.depth = depth

        # dual BFS tree on faces through non-tree edges
        nf = surface.n_faces
        fparent_edge: list[tuple[int, int] | None] = [None] * nf
        fparent: list[int] = [-1] * nf
        fseen = [False] * nf
        fseen[0] = True
        forder = [0]
        cotree = set()
        q = deque([0])
        while q:
            f = q.popleft()
            a, b, c = surface.faces[f]
            for e in sorted((edge_key(a, b), edge_key(b, c), edge_key(c, a))):
                if e in tree:
                    continue
                for g in surface.edge_faces[e]:
                    if g != f and not fseen[g]:
                        fseen[g] = True
                        fparent[g] = f
                        fparent_edge[g] = e
                        cotree.add(e)
                        forder.append(g)
                        q.append(g)
        self.fparent = fparent
        self.fparent_edge = fparent_edge
        self.generators: tuple[tuple[int, int], ...] = tuple(
            e for e in surface.edges if e not in tree and e not in cotree)
        self.rank = len(self.generators)

        mask = {e: 0 for e in surface.edges}
        for j, e in enumerate(self.generators):
            mask[e] = 1 << j
        for f in reversed(forder[1:]):
            a, b, c = surface.faces[f]
            pe = fparent_edge[f]
            acc = 0
            for e in (edge_key(a, b), edge_key(b, c), edge_key(c, a)):
                if e != pe:
                    acc ^= mask[e]
            mask[pe] = acc
        a, b, c = surface.faces[0]
        assert mask[edge_key(a, b)] ^ mask[edge_key(b, c)] ^ mask[edge_key(c, a)] == 0
        self.mask = mask

        self.generator_loops = tuple(self._generator_loop(e) for e in self.generators)
        dual_classes = [self.class_bits(self._dual_pushoff(j)) for j in range(self.rank)]
        # D_j . p_i = delta_ij  and  D_j = sum_k A_jk p_k   =>   Q = A^{-1}
        self.form = gf2_inverse(dual_classes, self.rank) if self.rank else []
        self._cover = None

    def _bfs_order(self):
        order = [0]
        children: dict[int, list[int]] = {}
        for v, p in enumerate(self.parent):
            if p >= 0:
                children.setdefault(p, []).append(v)
        i = 0
        while i < len(order):
            order += children.get(order[i], [])
            i += 1
        return order

    def _tree_path(self, u: int, v: int) -> list[int]:
        left, right = [u], [v]
        while left[-1] != right[-1]:
            if self.depth[left[-1]] >= self.depth[right[-1]]:
                left.append(self.parent[left[-1]])
            else:
                right.append(self.parent[right[-1]])
        return left + right[-2::-1]

    def _generator_loop(self, e) -> LoopPath:
        u, v = e
        return self.surface.loop(self._tree_path(v, u))

    def _dual_pushoff(self, j: int) -> list[int]:
        """Primal edge loop homotopic to the dual cycle through generator ``j``."""
        s = self.surface
        f0, f1 = s.edge_faces[self.generators[j]]
        # dual tree path f1 -> ... -> f0, as crossed edges
        up0, up1 = [f0], [f1]
        anc0 = {f0: 0}
        g = f0
        while self.fparent[g] >= 0:
            g = self.fparent[g]
            anc0[g] = len(up0)
            up0.append(g)
        g = f1
        while g not in anc0:
            g = self.fparent[g]
            up1.append(g)
        meet = up1[-1]
        crossings = [self.fparent_edge[f] for f in up1[:-1]]
        crossings += [self.fparent_edge[f] for f in reversed(up0[:anc0[meet]])]
        crossings.append(self.generators[j])
        verts = [min(e) for e in crossings]
        seq = [verts[0]]
        for i in range(1, len(verts) + 1):
            v = verts[i % len(verts)]
            if v != seq[-1]:
                seq.append(v)
        if len(seq) > 1 and seq[-1] == seq[0]:
            seq.pop()
        return seq

    # classes ---------------------------------------------------------------

    def class_bits(self, vertices) -> int:
        vs = list(vertices)
        if len(vs) > 1 and vs[0] == vs[-1]:
            vs = vs[:-1]
        acc = 0
        for i in range(len(vs)):
            if len(vs) > 1:
                acc ^= self.mask[edge_key(vs[i], vs[(i + 1) % len(vs)])]
        return acc

    def path_bits(self, vertices) -> int:
        acc = 0
        for i in range(len(vertices) - 1):
            acc ^= self.mask[edge_key(vertices[i], vertices[i + 1])]
        return acc

    def pairing(self, a: int, b: int) -> int:
        acc = 0
        for i in range(self.rank):
            if (a >> i) & 1:
                acc ^= self.form[i]
        return bin(acc & b).count("1") & 1

    # cover search ------------------------------------------------------------

    @property
    def cover(self) -> csr_matrix:
        if self._cover is None:
            K = 1 << self.rank
            rows, cols, vals = [], [], []
            for (u, v), w in self.surface.lengths.items():
                h = self.mask[(u, v)]
                for lab in range(K):
                    rows += [u * K + lab, v * K + (lab ^ h)]
                    cols += [v * K + (lab ^ h), u * K + lab]
                    vals += [w, w]
            n = self.surface.n_vertices * K
            self._cover = csr_matrix((vals, (rows, cols)), shape=(n, n))
        return self._cover

    def cover_neighbors(self):
        return _CoverNeighbors(self)


class _CoverNeighbors:
    def __init__(self, data: HomologyData):
        self.data = data
        self.K = 1 << data.rank

    def __getitem__(self, node: int):
        v, lab = divmod(node, self.K)
        out = []
        for w, wt in self.data.surface.neighbors[v]:
            out.append((w * self.K + (lab ^ self.data.mask[edge_key(v, w)]), wt))
        return out


_CACHE: "weakref.WeakKeyDictionary[TriSurface, HomologyData]" = weakref.WeakKeyDictionary()


def homology_data(surface: TriSurface) -> HomologyData:
    data = _CACHE.get(surface)
    if data is None:
        data = HomologyData(surface)
        _CACHE[surface] = data
    return data


def rank(surface: TriSurface) -> int:
    return homology_data(surface).rank


def z2_class_of(surface: TriSurface, loop) -> Z2Class:
    data = homology_data(surface)
    vs = loop.vertices if isinstance(loop, LoopPath) else loop
    return Z2Class(data.class_bits(vs), data.rank)


def z2_intersection(surface: TriSurface, a: Z2Class, b: Z2Class) -> int:
    """Intersection number mod 2 of the classes ``a`` and ``b``."""
    return homology_data(surface).pairing(a.bits, b.bits)


def all_classes(surface: TriSurface) -> list[Z2Class]:
    r = rank(surface)
    return [Z2Class(bits, r) for bits in range(1 << r)]


# shortest loops ----------------------------------------------------------------

def shortest_loop_in_class(surface: TriSurface, c: Z2Class) -> LoopPath:
    """Minimal-length edge loop in class ``c``.

    Every loop in a nonzero class uses an edge whose mask has a bit of ``c``
    set, so the search only starts from endpoints of such edges.  Among equal
    lengths the smallest basepoint wins, then the lexicographically smallest
    vertex sequence.
    """
    if not c:
        raise ZeroClass("the zero class has no shortest nontrivial loop")
    data = homology_data(surface)
    K = 1 << data.rank
    best_sources = None
    for j in range(data.rank):
        if (c.bits >> j) & 1:
            src = sorted({v for e, m in data.mask.items() if (m >> j) & 1 for v in e})
            if best_sources is None or len(src) < len(best_sources):
                best_sources = src
    sources = best_sources
    dist = np.atleast_2d(dijkstra(data.cover, directed=False, indices=[v * K for v in sources]))
    targets = np.array([v * K + c.bits for v in sources])
    loop_len = dist[np.arange(len(sources)), targets]
    best = float(loop_len.min())
    if not np.isfinite(best):
        raise ZeroClass("class is not represented by any loop")
    tol = TIE_RTOL * max(1.0, best)
    idx = int(np.flatnonzero(loop_len <= best + tol)[0])
    v = sources[idx]
    # distance to (v, c) equals distance from (v, 0) after relabelling sheets
    perm = np.arange(surface.n_vertices * K)
    perm = (perm // K) * K + ((perm % K) ^ c.bits)
    to_target = dist[idx][perm]
    seq = lex_walk(data.cover_neighbors(), to_target, v * K, v * K + c.bits)
    verts = [node // K for node in seq[:-1]]
    return surface.loop(verts)


def loop_pieces(surface: TriSurface, loop: LoopPath) -> list[LoopPath]:
    """Split a loop at repeated vertices into simple closed pieces."""
    pieces = []
    stack: list[int] = []
    pos: dict[int, int] = {}
    for v in loop.closed_sequence():
        if v in pos:
            i = pos[v]
            piece = stack[i:]
            for w in piece[1:]:
                del pos[w]
            del stack[i + 1:]
            if len(piece) > 1:
                pieces.append(surface.loop(piece))
        else:
            pos[v] = len(stack)
            stack.append(v)
    if len(stack) > 1:
        pieces.append(surface.loop(stack))
    return pieces


def _independent(bits: int, others: list[int]) -> bool:
    return gf2_rank(others + [bits]) > gf2_rank(others)


def _simplify(surface, data, loop: LoopPath, others: list[int]) -> LoopPath:
    if loop.simple:
        return loop
    keep = [p for p in loop_pieces(surface, loop) if _independent(data.class_bits(p.vertices), others)]
    return min(keep, key=lambda p: (p.length, len(p.vertices), p.vertices))


def _loop_distances(surface: TriSurface, loop: LoopPath):
    vs = list(loop.vertices)
    uniq = sorted(set(vs))
    dist = np.atleast_2d(surface.distances_from(uniq))
    row = {v: i for i, v in enumerate(uniq)}
    pos = [0.0]
    seq = loop.closed_sequence()
    for i in range(len(vs)):
        pos.append(pos[-1] + surface.length(seq[i], seq[i + 1]))
    return vs, dist, row, pos


def is_strongly_isometric(surface: TriSurface, loop: LoopPath, tol: float = 1e-9):
    """Compare arc distances along ``loop`` with ambient distances.

    Returns ``(flag, max_violation)`` where ``max_violation`` is the largest
    ``min(arc) - ambient`` over vertex pairs on the loop.
    """
    if len(loop.vertices) < 2:
        return True, 0.0
    vs, dist, row, pos = _loop_distances(surface, loop)
    total = pos[-1]
    p = np.array(pos[:-1])
    arc = np.abs(p[:, None] - p[None, :])
    arc = np.minimum(arc, total - arc)
    amb = dist[[row[v] for v in vs]][:, vs]
    viol = float(max(0.0, (arc - amb).max()))
    return viol <= tol, viol


def shorten_exchange(surface: TriSurface, loop: LoopPath, others=(), tol: float = 1e-9) -> LoopPath:
    """Replace an arc of ``loop`` by a shorter minimizing path until no
    shortcut remains.

    ``others`` are classes (``Z2Class`` or bitmasks) of the remaining basis
    loops; the kept piece always has a class outside their span, so the
    basis property survives each exchange.  Among shortcuts the shortest
    resulting loop wins; ties are broken by the pair of loop positions.
    """
    data = homology_data(surface)
    others = [o.bits if isinstance(o, Z2Class) else int(o) for o in others]
    if not _independent(data.class_bits(loop.vertices), others):
        raise ValueError("loop class lies in the span of the other classes")
    loop = _simplify(surface, data, loop, others)
    while True:
        if len(loop.vertices) < 3:
            return loop
        vs, dist, row, pos = _loop_distances(surface, loop)
        n = len(vs)
        total = pos[-1]
        prefix = [0]
        seq = loop.closed_sequence()
        for i in range(n):
            prefix.append(prefix[-1] ^ data.mask[edge_key(seq[i], seq[i + 1])])
        best = None
        for i, j in combinations(range(n), 2):
            d = dist[row[vs[i]], vs[j]]
            arc1 = pos[j] - pos[i]
            arc2 = total - arc1
            if d >= min(arc1, arc2) - tol:
                continue
            eta = lex_walk(surface.neighbors, dist[row[vs[j]]], vs[i], vs[j])
            eb = data.path_bits(eta)
            c1 = prefix[j] ^ prefix[i] ^ eb
            c2 = c1 ^ data.class_bits(loop.vertices)
            # piece 1: arc i..j then eta back; piece 2: arc j..i then eta
            cands = []
            if _independent(c1, others):
                verts = vs[i:j + 1] + list(reversed(eta[1:-1]))
                cands.append((arc1 + d, verts))
            if _independent(c2, others):
                verts = vs[j:] + vs[:i + 1] + eta[1:-1]
                cands.append((arc2 + d, verts))
            for length, verts in cands:
                key = (length, i, j)
                if best is None or key < best[0]:
                    best = (key, verts)
        if best is None:
            return loop
        new = _simplify(surface, data, surface.loop(best[1]), others)
        if new.length >= loop.length - tol:
            return loop
        loop = new


@dataclass(frozen=True)
class HomologyBasis:
    loops: tuple[LoopPath, ...]
    classes: tuple[Z2Class, ...]

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(l.length for l in self.loops)

    @property
    def total_length(self) -> float:
        return sum(self.lengths)

    def __len__(self) -> int:
        return len(self.loops)

    def __getitem__(self, i):
        return self.loops[i]


def shortest_basis(surface: TriSurface) -> HomologyBasis:
    """Length-sorted GF(2) homology basis of minimal total length.

    Each nonzero class is represented by its shortest loop; classes are then
    taken greedily by length subject to independence (the classes form a
    matroid, so greedy is optimal), and each pick is run through
    :func:`shorten_exchange` against the others.
    """
    data = homology_data(surface)
    if data.rank == 0:
        raise ValueError("surface has trivial first homology")
    cands = []
    for bits in range(1, 1 << data.rank):
        lp = shortest_loop_in_class(surface, Z2Class(bits, data.rank))
        cands.append((lp.length, len(lp.vertices), lp.vertices, bits, lp))
    cands.sort(key=lambda t: t[:4])
    chosen: list[tuple[int, LoopPath]] = []
    for _, _, _, bits, lp in cands:
        if _independent(bits, [b for b, _ in chosen]):
            chosen.append((bits, lp))
        if len(chosen) == data.rank:
            break
    loops = []
    for i, (bits, lp) in enumerate(chosen):
        others = [b for k, (b, _) in enumerate(chosen) if k != i]
        loops.append(shorten_exchange(surface, lp, others))
    order = sorted(range(len(loops)), key=lambda i: (loops[i].length, loops[i].vertices))
    loops = [loops[i] for i in order]
    classes = [Z2Class(data.class_bits(l.vertices), data.rank) for l in loops]
    return HomologyBasis(tuple(loops), tuple(classes))


# geometric crossings --------------------------------------------------------------

def _face_lookup(surface: TriSurface):
    return {tuple(sorted(f)): i for i, f in enumerate(surface.faces)}


def _wedges(surface: TriSurface, faces_by_key, v: int, x: int, y: int):
    """Split the fan at interior vertex ``v`` by neighbours ``x`` and ``y``.

    Returns two ``(neighbours, faces)`` groups; the neighbour sets exclude
    ``x`` and ``y``.
    """
    order, closed = surface.fan(v)
    if not closed:
        raise ValueError(f"vertex {v} is on the boundary")
    d = len(order)
    ix, iy = order.index(x), order.index(y)
    groups = []
    for a, b in ((ix, iy), (iy, ix)):
        nbrs, faces = set(), set()
        i = a
        while i != b:
            j = (i + 1) % d
            faces.add(faces_by_key[tuple(sorted((v, order[i], order[j])))])
            if j != b:
                nbrs.add(order[j])
            i = j
        groups.append((nbrs, faces))
    return groups


def _side_face(surface, fk, v, x, y, probe_face):
    g0, g1 = _wedges(surface, fk, v, x, y)
    return 0 if probe_face in g0[1] else 1


def intersection_points(surface: TriSurface, a: LoopPath, b: LoopPath) -> set[int]:
    """Vertices where simple loops ``a`` and ``b`` cross transversely.

    Shared stretches (common runs of edges) count as one crossing when ``b``
    enters and leaves them on opposite sides of ``a``; the run is reported by
    its smallest vertex.  Touching without crossing is excluded.
    """
    if not (a.simple and b.simple):
        raise ValueError("intersection_points needs simple loops")
    shared = set(a.vertices) & set(b.vertices)
    if not shared or len(a.vertices) < 3 or len(b.vertices) < 3:
        return set()
    ea, eb = set(a.edges()), set(b.edges())
    common = ea & eb
    if common == ea:
        return set()
    fk = _face_lookup(surface)
    av = list(a.vertices)
    n = len(av)
    bpos = {v: i for i, v in enumerate(b.vertices)}
    bv = list(b.vertices)
    start = next(i for i in range(n) if edge_key(av[i - 1], av[i]) not in common)
    out = set()
    i = 0
    while i < n:
        idx = (start + i) % n
        v0 = av[idx]
        if v0 not in shared:
            i += 1
            continue
        run = [v0]
        while i + 1 < n and edge_key(av[(start + i) % n], av[(start + i + 1) % n]) in common:
            i += 1
            run.append(av[(start + i) % n])
        i += 1
        a_prev = av[(av.index(run[0]) - 1) % n]
        a_next = av[(av.index(run[-1]) + 1) % n]

        def outside(v, inner):
            j = bpos[v]
            cand = [bv[j - 1], bv[(j + 1) % len(bv)]]
            return [w for w in cand if w != inner]

        if len(run) == 1:
            w = [bv[bpos[v0] - 1], bv[(bpos[v0] + 1) % len(bv)]]
            g0, _ = _wedges(surface, fk, v0, a_prev, a_next)
            if (w[0] in g0[0]) != (w[1] in g0[0]):
                out.add(v0)
            continue
        w_in = outside(run[0], run[1])
        w_out = outside(run[-1], run[-2])
        if len(w_in) != 1 or len(w_out) != 1:
            continue
        g = _wedges(surface, fk, run[0], a_prev, run[1])
        side = 0 if w_in[0] in g[0][0] else 1
        # face on that side of the first run edge
        e_faces = surface.edge_faces[edge_key(run[0], run[1])]
        face = next(f for f in e_faces if f in g[side][1])
        for k in range(1, len(run) - 1):
            g = _wedges(surface, fk, run[k], run[k - 1], run[k + 1])
            s = 0 if face in g[0][1] else 1
            e_faces = surface.edge_faces[edge_key(run[k], run[k + 1])]
            face = next(f for f in e_faces if f in g[s][1])
        g = _wedges(surface, fk, run[-1], run[-2], a_next)
        s = 0 if face in g[0][1] else 1
        if w_out[0] not in g[s][0]:
            out.add(min(run))
    return out
