"""Finite-metric tools: segment GH bounds, metric completion, circle-vs-segment search.

The circle-vs-segment search asks how close a circle of length ``L`` can sit
to a segment of length ``I`` inside some metric space when the circle keeps
its own arc-length metric (strong isometry).  Circle and segment are
sampled; each circle sample ``s_i`` is assigned a segment sample
``t_g(i)`` with ``d(s_i, t_g(i)) <= nu`` and all other cross distances are
free.  For a fixed assignment the smallest feasible ``nu`` has a closed form
(see :func:`assignment_nu`), so the search is a branch and bound over
assignments.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import csgraph_from_dense, shortest_path

from .mesh import LoopPath, TriSurface


class InconsistentBounds(ValueError):
    """A pair has lower bound above its upper bound."""


class SearchBudgetExceeded(RuntimeError):
    """Assignment search hit its node cap; ``partial`` only bounds from above."""

    def __init__(self, msg: str, partial: "CircleSegmentResult"):
        super().__init__(msg)
        self.partial = partial


class CoveringFailed(RuntimeError):
    """Balls of radius ``3 nu`` around the segment preimages miss a vertex."""


# --------------------------------------------------------------------------
# finite metrics


@dataclass(frozen=True)
class FiniteMetric:
    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def violations(self, tol: float = 1e-9) -> list[str]:
        d = self.d
        out = []
        if np.any(d < -tol):
            out.append("negative distance")
        if np.any(np.abs(np.diag(d)) > tol):
            out.append("nonzero diagonal")
        if np.any(np.abs(d - d.T) > tol):
            out.append("asymmetric")
        off = d + np.eye(self.n)
        if np.any(off <= tol):
            out.append("distinct points at distance zero")
        # d[i,j] <= d[i,k] + d[k,j] for all k
        via = np.min(d[:, :, None] + d[None, :, :], axis=1)
        if np.any(d > via + tol):
            out.append("triangle inequality")
        return out

    def is_metric(self, tol: float = 1e-9) -> bool:
        return not self.violations(tol)


def metric_completion_feasible(n: int, lower: dict, upper: dict, tol: float = 1e-12) -> bool:
    """Does a (pseudo)metric on ``n`` points meet the given pair bounds?

    ``lower`` and ``upper`` map unordered pairs ``(i, j)`` to bounds.  The
    largest metric below the upper bounds is their shortest-path closure
    (unconstrained pairs are unbounded), so the bounds are feasible exactly
    when that closure respects every lower bound.
    """
    norm_up, norm_lo = {}, {}
    for src, dst in ((upper, norm_up), (lower, norm_lo)):
        for (i, j), b in src.items():
            if b < 0:
                raise ValueError("bounds must be nonnegative")
            if i == j:
                continue
            key = (min(i, j), max(i, j))
            dst[key] = min(dst.get(key, math.inf), b) if dst is norm_up else max(dst.get(key, 0.0), b)
    for key, lo in norm_lo.items():
        if key in norm_up and lo > norm_up[key]:
            raise InconsistentBounds(f"pair {key}: lower {lo} > upper {norm_up[key]}")
    w = np.full((n, n), np.inf)
    np.fill_diagonal(w, 0.0)
    for (i, j), b in norm_up.items():
        w[i, j] = w[j, i] = b
    if not n:
        return True
    # zero upper bounds are real edges; a dense matrix would read them as absent
    closure = shortest_path(csgraph_from_dense(w, null_value=np.inf), method="FW", directed=False)
    return all(closure[i, j] >= lo - tol * max(1.0, lo) for (i, j), lo in norm_lo.items())


# --------------------------------------------------------------------------
# circle against segment


def _minplus(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.min(a[:, :, None] + b[None, :, :], axis=1)


def assignment_nu(C: np.ndarray, E: np.ndarray) -> float:
    """Smallest ``nu`` making one assignment feasible.

    ``C`` holds the (fixed) circle distances between the assigned samples and
    ``E[i, j] = |u_g(i) - u_g(j)|`` the segment distances between their
    images.  A path that leaves the circle ``h`` times costs ``2 h nu`` plus
    alternating circle and segment travel; with ``W_h = C (E C)^h`` in the
    min-plus algebra, the fixed distances survive exactly when

        C <= W_h + 2 h nu        and        E <= W_(h-1) + 2 h nu

    for every ``h >= 1``.  The chains stop improving after at most ``n``
    hops, after which the ratios only shrink.
    """
    k = C.shape[0]
    if k == 0:
        return 0.0
    EC = _minplus(E, C)
    W_prev = C
    best = 0.0
    for h in range(1, k + 2):
        W = _minplus(W_prev, EC)
        best = max(best, float(np.max(C - W)) / (2 * h), float(np.max(E - W_prev)) / (2 * h))
        if np.array_equal(W, W_prev):
            # W is stationary from here on; later terms are smaller
            break
        W_prev = W
    return best


def completion_bounds(L: float, n: int, I_len: float, m: int, g, nu: float):
    """Pair bounds of the full ``n + m`` point instance for assignment ``g``.

    Circle samples are points ``0..n-1``, segment samples ``n..n+m-1``.
    """
    lower, upper = {}, {}
    for i in range(n):
        for j in range(i + 1, n):
            d = min(j - i, n - (j - i)) * L / n
            lower[(i, j)] = upper[(i, j)] = d
    for a in range(m):
        for b in range(a + 1, m):
            d = (b - a) * I_len / (m - 1)
            lower[(n + a, n + b)] = upper[(n + a, n + b)] = d
    for i in range(n):
        upper[(i, n + g[i])] = nu
    return lower, upper


@dataclass
class CircleSegmentResult:
    L: float
    n: int
    m: int
    I_len: float
    nu_min: float
    assignment: tuple[int, ...]
    assignments_tested: int
    nodes: int
    complete: bool
    wall_time_s: float = field(default=0.0, compare=False)

    def row(self) -> dict:
        return {"L": self.L, "n": self.n, "m": self.m, "I_len": self.I_len, "nu_min": self.nu_min,
                "assignments_tested": self.assignments_tested, "wall_time_s": self.wall_time_s}


CSV_COLUMNS = ("L", "n", "m", "I_len", "nu_min", "assignments_tested", "wall_time_s")


def circle_segment_min_nu(L: float, n: int, m: int, I_len: float, *, max_nodes: int = 2_000_000,
                          certify: bool = True) -> CircleSegmentResult:
    """Minimum over assignments of the smallest feasible ``nu``.

    Depth-first branch and bound with forward checking.  Two samples at arc
    distance ``c`` sent to segment samples at distance ``e`` already force
    ``nu >= |c - e| / 2``, so every assignment prunes the candidate values
    of the unassigned samples against the incumbent; the next sample is the
    one with fewest candidates left.  A partial assignment is dropped once
    the closed-form ``nu`` of its assigned part (a lower bound, since
    constraints only accumulate) reaches the incumbent.

    Symmetries: sample 0 carries the smallest segment index (rotations),
    that index is no farther from its end than the largest one is from the
    other end (segment flip), and ``g(1) <= g(n-1)`` (circle reflection).

    With ``certify`` the optimum is cross-checked by metric completion just
    above and just below the returned value.
    """
    if n < 2 or n % 2:
        raise ValueError("n must be even and >= 2")
    if m < 2:
        raise ValueError("m must be >= 2")
    if L <= 0 or I_len <= 0:
        raise ValueError("L and I_len must be positive")
    t0 = time.perf_counter()
    idx = np.arange(n)
    gap = np.abs(idx[:, None] - idx[None, :])
    Cfull = np.minimum(gap, n - gap) * (L / n)
    u = np.arange(m) * (I_len / (m - 1))
    # pair[i, j, v, w]: nu forced by sending i to v and j to w
    seg = np.abs(u[:, None] - u[None, :])
    pair = np.abs(Cfull[:, :, None, None] - seg[None, None, :, :]) / 2.0

    best_nu = math.inf
    best_g: tuple[int, ...] = ()
    tested = 0
    nodes = 0
    g = [-1] * n

    def bound(assigned):
        C = Cfull[np.ix_(assigned, assigned)]
        gu = u[[g[i] for i in assigned]]
        return assignment_nu(C, np.abs(gu[:, None] - gu[None, :]))

    def rec(assigned, dom):
        nonlocal best_nu, best_g, tested, nodes
        nodes += 1
        if nodes > max_nodes:
            raise _Budget
        if len(assigned) == n:
            tested += 1
            val = bound(assigned)
            if val < best_nu:
                best_nu, best_g = val, tuple(g)
            return
        free = [i for i in range(n) if g[i] < 0]
        i = min(free, key=lambda j: (int(dom[j].sum()), j))
        for v in np.flatnonzero(dom[i]):
            v = int(v)
            if i == n - 1 and n > 2 and g[1] >= 0 and g[1] > v:
                continue
            if i == 1 and n > 2 and g[n - 1] >= 0 and v > g[n - 1]:
                continue
            g[i] = v
            nd = dom & (pair[i, :, v, :] < best_nu)
            nd[i] = False
            nd[i, v] = True
            ok = all(nd[j].any() for j in free)
            if ok:
                nxt = assigned + [i]
                if bound(nxt) < best_nu:
                    rec(nxt, nd)
            g[i] = -1

    complete = True
    try:
        for v0 in range(m):
            if v0 > m - 1 - v0:
                break
            g[0] = v0
            dom = np.zeros((n, m), dtype=bool)
            dom[:, v0:m - v0] = True
            dom &= pair[0, :, v0, :] < best_nu
            dom[0] = False
            dom[0, v0] = True
            if all(dom[j].any() for j in range(n)):
                rec([0], dom)
            g[0] = -1
    except _Budget:
        complete = False
    res = CircleSegmentResult(L, n, m, I_len, best_nu, best_g, tested, nodes, complete,
                              time.perf_counter() - t0)
    if not complete:
        raise SearchBudgetExceeded(f"node cap {max_nodes} reached", res)
    if certify:
        _certify(res)
    res.wall_time_s = time.perf_counter() - t0
    return res


class _Budget(Exception):
    pass


def _certify(res: CircleSegmentResult) -> None:
    g, nu = res.assignment, res.nu_min
    hi = nu * (1 + 1e-9) + 1e-12
    lo_b, up_b = completion_bounds(res.L, res.n, res.I_len, res.m, g, hi)
    if not metric_completion_feasible(res.n + res.m, lo_b, up_b):
        raise AssertionError("metric completion rejects the optimum")
    if nu > 1e-9:
        lo_b, up_b = completion_bounds(res.L, res.n, res.I_len, res.m, g, nu * (1 - 1e-7))
        if metric_completion_feasible(res.n + res.m, lo_b, up_b):
            raise AssertionError("metric completion accepts below the optimum")


def assignment_nu_bisect(L: float, n: int, m: int, I_len: float, g, tol: float = 1e-10) -> float:
    """Smallest feasible ``nu`` for one assignment by bisection on metric completion."""
    lo, hi = 0.0, L / 2 + I_len
    lb, ub = completion_bounds(L, n, I_len, m, g, lo)
    if metric_completion_feasible(n + m, lb, ub):
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lb, ub = completion_bounds(L, n, I_len, m, g, mid)
        if metric_completion_feasible(n + m, lb, ub):
            hi = mid
        else:
            lo = mid
    return hi


# --------------------------------------------------------------------------
# surfaces against segments


@dataclass(frozen=True)
class GHSegmentReport:
    nu_hat: float
    I_len: float
    f: np.ndarray = field(repr=False)
    distortion: float
    x0: int
    gap: float

    def to_dict(self) -> dict:
        return {"nu_hat": self.nu_hat, "I_len": self.I_len, "distortion": self.distortion,
                "x0": self.x0, "gap": self.gap}


def f_gap(f: np.ndarray, I_len: float) -> float:
    """Largest gap of ``f(V) ∪ {0, I_len}`` in ``[0, I_len]``.

    Pairing each segment point with a vertex of nearest ``f`` value extends
    the graph of ``f`` to a full correspondence with the segment at extra
    distortion at most this gap.
    """
    vals = np.sort(np.concatenate([[0.0], np.asarray(f, dtype=float), [I_len]]))
    return float(np.max(np.diff(vals))) if vals.size > 1 else 0.0


def gh_segment_upper_bound(surface: TriSurface, D: np.ndarray | None = None) -> GHSegmentReport:
    """Upper bound on the GH distance from the vertex metric to a segment.

    ``f`` is the distance from one endpoint of a diameter, ``I = max f``,
    and ``nu = max |d(u, v) - |f(u) - f(v)|| / 2`` is half the distortion
    of the graph of ``f``.  ``f`` is 1-Lipschitz and ``f(x0) = 0``,
    ``max f = I``; the correspondence also pairing each segment point with
    the vertex of nearest ``f`` value adds at most ``gap`` (bounded by the
    longest edge) to the distortion.
    """
    if D is None:
        D = surface.all_distances()
    flat = int(np.argmax(D))
    x0 = flat // D.shape[0]
    f = D[x0].copy()
    I_len = float(f.max())
    dist = float(np.max(np.abs(D - np.abs(f[:, None] - f[None, :]))))
    return GHSegmentReport(0.5 * dist, I_len, f, dist, int(x0), f_gap(f, I_len))


def min_loop_distance(surface: TriSurface, a: LoopPath, b: LoopPath) -> float:
    """Smallest graph distance between a vertex of ``a`` and a vertex of ``b``."""
    dist = surface.distances_from(list(a.vertices))
    if dist.ndim == 2:
        dist = dist.min(axis=0)
    return float(min(dist[v] for v in b.vertices))


@dataclass(frozen=True)
class AreaBoundReport:
    area: float
    bound: float
    slack: float
    C: float
    n_points: int
    centers: tuple[int, ...]
    max_cover_distance: float
    radius: float

    def to_dict(self) -> dict:
        return {"area": self.area, "bound": self.bound, "slack": self.slack, "C": self.C,
                "n_points": self.n_points, "max_cover_distance": self.max_cover_distance,
                "radius": self.radius}


def area_bound_check(surface: TriSurface, nu_hat: float, I_len: float, C: float = 4.0,
                     f: np.ndarray | None = None) -> AreaBoundReport:
    """Covering by ``3 nu`` balls along the segment and the area bound ``C I nu``.

    Segment points ``P_k = k nu`` for ``k = 0..floor(I/nu)`` are pulled back to
    the vertex ``p_k`` whose ``f`` is nearest; every vertex must lie within
    ``3 nu`` of some ``p_k``.  ``f`` defaults to the map of
    :func:`gh_segment_upper_bound`.
    """
    if nu_hat <= 0:
        raise ValueError("nu_hat must be positive")
    if f is None:
        f = gh_segment_upper_bound(surface).f
    npts = int(math.floor(I_len / nu_hat)) + 1
    centers = []
    for k in range(npts):
        centers.append(int(np.argmin(np.abs(f - k * nu_hat))))
    centers = tuple(dict.fromkeys(centers))
    dist = surface.distances_from(list(centers))
    cover = dist.min(axis=0) if dist.ndim == 2 else dist
    worst = float(cover.max())
    radius = 3.0 * nu_hat
    if worst > radius * (1 + 1e-12):
        raise CoveringFailed(f"vertex at distance {worst:.6g} > 3 nu = {radius:.6g}")
    area = surface.area()
    bound = C * I_len * nu_hat
    return AreaBoundReport(area, bound, bound - area, C, npts, centers, worst, radius)
