"""Dual trees, the Peano curve between a fair tree and its dual, and planar distance tools.

Geometry is done in integer units of ``1/(4n)``: primal vertex ``(i, j)`` is
at ``(4i, 4j)``, dual vertex ``(k, l)`` at ``(4k-2, 4l+2)`` and fine point
``(a, b)`` (``a, b`` in ``0..2n-1``) at ``(2a+1, 2b+1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.spatial import cKDTree

from .feu import is_fair_tree
from .graphs import GraphError, SquareLattice
from .trees import SpanningTree, is_spanning_tree


@lru_cache(maxsize=8)
def _dual_edge_table(n: int) -> dict[tuple[int, int], int]:
    g = SquareLattice(n).dual_graph()
    return {tuple(sorted(e)): idx for idx, e in enumerate(g.edges)}


@dataclass(frozen=True)
class DualTree:
    lattice: SquareLattice
    edges: frozenset  # indices into lattice.dual_graph()

    def segments(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        """Dual ``(k, l)`` endpoint pairs of every edge, in edge-index order."""
        g = self.lattice.dual_graph()
        n = self.lattice.n
        out = []
        for e in sorted(self.edges):
            u, v = g.edges[e]
            out.append(((u % n + 1, u // n), (v % n + 1, v // n)))
        return out


def _require_fair(lat: SquareLattice, t: SpanningTree):
    if t.graph != lat.grid.graph:
        raise GraphError("tree does not belong to this lattice's modified grid")
    if not is_fair_tree(lat.grid, t):
        raise GraphError("tree is not fair: some node does not use exactly one of its two edges")


def dual_tree(lat: SquareLattice, t: SpanningTree) -> DualTree:
    """Duals of the unused grid edges plus the left dual column and the top dual row."""
    _require_fair(lat, t)
    n = lat.n
    table = _dual_edge_table(n)

    def add(p, q):
        chosen.add(table[tuple(sorted((lat.dual_index(*p), lat.dual_index(*q))))])

    chosen: set[int] = set()
    for l in range(n - 1):
        add((1, l), (1, l + 1))
    for k in range(1, n):
        add((k, n - 1), (k + 1, n - 1))
    for e in range(lat.grid.graph.edge_count):
        if e in t.edges:
            continue
        v, down = divmod(e, 2)
        i, j = lat.grid.coords(v)
        if down:
            add((i, j - 1), (i + 1, j - 1))
        else:
            add((i + 1, j - 1), (i + 1, j))
    dt = DualTree(lat, frozenset(chosen))
    if not is_spanning_tree(lat.dual_graph(), dt.edges):
        raise GraphError("dual edge set is not a spanning tree")
    return dt


def _walls(lat: SquareLattice, t: SpanningTree, dt: DualTree):
    """``right[a, b]``: move (a,b)->(a+1,b) is blocked; ``up[a, b]``: move (a,b)->(a,b+1) is blocked."""
    n = lat.n
    right = np.zeros((2 * n - 1, 2 * n), dtype=bool)
    up = np.zeros((2 * n, 2 * n - 1), dtype=bool)
    for e in t.edges:
        v, down = divmod(e, 2)
        i, j = lat.grid.coords(v)
        if down:
            right[2 * i - 1, 2 * j - 2 : 2 * j] = True
        else:
            up[2 * i : 2 * i + 2, 2 * j - 1] = True
    for (k, l), (k2, l2) in dt.segments():
        if k == k2:
            right[2 * k - 2, 2 * l + 1 : 2 * l + 3] = True
        else:
            up[2 * k - 1 : 2 * k + 1, 2 * l] = True
    return right, up


@dataclass(frozen=True)
class LatticeCurve:
    """Planar lattice path stored in integer units of ``1/(4n)``.

    The first and last entries are the corners 0 and 1+i; everything in
    between is a fine-lattice point, consecutive ones ``1/(2n)`` apart.
    """

    n: int
    units: np.ndarray  # shape (L, 2), int

    @cached_property
    def points(self) -> np.ndarray:
        return self.units / (4.0 * self.n)

    @property
    def fine_units(self) -> np.ndarray:
        return self.units[1:-1]

    def __len__(self):
        return len(self.units)


def peano_curve(lat: SquareLattice, t: SpanningTree, dual: DualTree | None = None) -> LatticeCurve:
    """The fine-lattice walk squeezed between ``t`` and its dual tree, from 0 to 1+i.

    Every fine point has exactly two uncrossed moves, so the uncrossed moves
    form one closed loop around the dual tree. The walk leaves the point next
    to 0 eastwards and follows the loop until it reaches the point next to
    1+i. The other arc of the loop, which runs through the strip outside the
    dual tree's left column and top row, is not part of the curve.
    """
    if dual is None:
        dual = dual_tree(lat, t)
    right, up = _walls(lat, t, dual)
    n = lat.n
    size = 2 * n
    # open[d][a][b] for d in E, W, N, S
    E = np.zeros((size, size), dtype=bool)
    E[:-1] = ~right
    W = np.zeros((size, size), dtype=bool)
    W[1:] = ~right
    N = np.zeros((size, size), dtype=bool)
    N[:, :-1] = ~up
    S = np.zeros((size, size), dtype=bool)
    S[:, 1:] = ~up
    degree = E.astype(int) + W + N + S
    if np.any(degree != 2):
        raise GraphError("uncrossed fine moves do not form a loop; trees are not dual")
    moves = ((E, 1, 0), (W, -1, 0), (N, 0, 1), (S, 0, -1))
    opens = [(m.tolist(), da, db) for m, da, db in moves]

    pts = [(0, 0), (1, 0)]
    prev = (0, 0)
    cur = (1, 0)
    goal = (size - 1, size - 1)
    limit = size * size
    while cur != goal:
        a, b = cur
        for m, da, db in opens:
            if m[a][b] and (a + da, b + db) != prev:
                prev, cur = cur, (a + da, b + db)
                break
        pts.append(cur)
        if len(pts) > limit:
            raise GraphError("walk failed to reach the far corner")
    fine = np.asarray(pts, dtype=np.int64) * 2 + 1
    units = np.vstack([[0, 0], fine, [4 * n, 4 * n]])
    return LatticeCurve(n, units)


# --- regions and distances --------------------------------------------------


@dataclass(frozen=True)
class Region:
    """``Q_b = {x + iy in [0,1]^2 : x + y <= b}``, discretised at ``resolution``."""

    b: float
    resolution: float

    def __post_init__(self):
        if not 0.0 <= self.b <= 2.0:
            raise ValueError(f"b must lie in [0, 2], got {self.b}")
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")

    def contains(self, pts, eps: float = 1e-12) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return pts.sum(axis=1) <= self.b + eps

    def sample(self) -> np.ndarray:
        k = int(round(1.0 / self.resolution))
        axis = np.linspace(0.0, 1.0, k + 1)
        x, y = np.meshgrid(axis, axis, indexing="ij")
        pts = np.column_stack([x.ravel(), y.ravel()])
        return pts[self.contains(pts)]


def region(b: float, n: int) -> Region:
    return Region(b, 1.0 / (2 * n))


def stopping_index(c: LatticeCurve, b: float, eps: float = 1e-12) -> int:
    """First index whose point has ``x + y > b``; the curve length if there is none."""
    outside = np.flatnonzero(c.points.sum(axis=1) > b + eps)
    return int(outside[0]) if outside.size else len(c)


def _as_points(p) -> np.ndarray:
    """Rows are points; complex input maps to ``(re, im)`` and 1-D real input to points on a line."""
    arr = np.asarray(p)
    if np.iscomplexobj(arr):
        arr = np.column_stack([arr.real.ravel(), arr.imag.ravel()])
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.size == 0:
        raise ValueError("point set is empty")
    return arr


def directed_hausdorff(a, b) -> float:
    """``max over p in a of min over q in b of |p - q|``."""
    a, b = _as_points(a), _as_points(b)
    d, _ = cKDTree(b).query(a, k=1)
    return float(d.max())


def hausdorff_distance(a, b) -> float:
    return max(directed_hausdorff(a, b), directed_hausdorff(b, a))


def hausdorff_distance_brute(a, b, chunk: int = 2048) -> float:
    """Quadratic reference implementation."""
    a, b = _as_points(a), _as_points(b)

    def one_sided(p, q):
        worst = 0.0
        for s in range(0, len(p), chunk):
            d = np.sqrt(((p[s : s + chunk, None, :] - q[None, :, :]) ** 2).sum(axis=-1))
            worst = max(worst, float(d.min(axis=1).max()))
        return worst

    return max(one_sided(a, b), one_sided(b, a))


def coverage_radius(c: LatticeCurve, prefix_end: int, r: Region) -> float:
    """How far the discretised ``Q_b`` reaches beyond the first ``prefix_end`` curve points."""
    if prefix_end < 1:
        raise ValueError("curve prefix is empty")
    return directed_hausdorff(r.sample(), c.points[:prefix_end])
