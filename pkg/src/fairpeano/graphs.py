"""Multigraphs, modified grids and the unit-square lattice.

Vertices are integers ``0..vertex_count-1`` and edges are addressed by their
position in the edge tuple. Parallel edges are allowed, self-loops are not.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.vertex_count < 1:
            raise GraphError(f"vertex_count must be positive, got {self.vertex_count}")
        for k, (u, v) in enumerate(self.edges):
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise GraphError(f"edge {k} = ({u}, {v}) has an endpoint outside 0..{self.vertex_count - 1}")
            if u == v:
                raise GraphError(f"edge {k} = ({u}, {v}) is a self-loop")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def endpoints(self) -> np.ndarray:
        """(|E|, 2) integer array of edge endpoints."""
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.asarray(self.edges, dtype=np.int64)

    @cached_property
    def incidence(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per vertex, the (edge index, other endpoint) pairs in edge order."""
        inc: list[list[tuple[int, int]]] = [[] for _ in range(self.vertex_count)]
        for k, (u, v) in enumerate(self.edges):
            inc[u].append((k, v))
            inc[v].append((k, u))
        return tuple(tuple(x) for x in inc)

    def is_connected(self) -> bool:
        return len(components(self.vertex_count, self.edges)) == 1

    def laplacian(self, weights=None) -> np.ndarray:
        """Dense weighted Laplacian; parallel edges add their conductances."""
        w = np.ones(self.edge_count) if weights is None else np.asarray(weights, dtype=float)
        L = np.zeros((self.vertex_count, self.vertex_count))
        if self.edge_count:
            u, v = self.endpoints[:, 0], self.endpoints[:, 1]
            np.add.at(L, (u, v), -w)
            np.add.at(L, (v, u), -w)
            np.add.at(L, (u, u), w)
            np.add.at(L, (v, v), w)
        return L


def build_graph(vertex_count: int, edges: Iterable[Sequence[int]]) -> Graph:
    return Graph(int(vertex_count), tuple((int(u), int(v)) for u, v in edges))


def components(vertex_count: int, edges: Iterable[tuple[int, int]]) -> list[list[int]]:
    parent = list(range(vertex_count))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    groups: dict[int, list[int]] = {}
    for x in range(vertex_count):
        groups.setdefault(find(x), []).append(x)
    return list(groups.values())


def one_density_fraction(edge_count: int, vertex_count: int) -> Fraction:
    return Fraction(edge_count, vertex_count - 1)


# --- modified grids -------------------------------------------------------


@dataclass(frozen=True)
class ModifiedGrid:
    """An m-by-n grid whose bottom and right neighbours collapse onto ``v0``.

    Grid node ``(i, j)`` (column ``i`` in 1..m from the left, row ``j`` in
    1..n from the bottom) has index ``(j-1)*m + (i-1)``; ``v0`` is index
    ``m*n``. Node ``v`` owns edges ``2v`` (right) and ``2v+1`` (down), so
    ``partition[v] == (2v, 2v+1)``.
    """

    m: int
    n: int
    graph: Graph = field(repr=False)
    partition: tuple[tuple[int, int], ...] = field(repr=False)

    @property
    def v0(self) -> int:
        return self.m * self.n

    @property
    def node_count(self) -> int:
        return self.m * self.n

    def index(self, i: int, j: int) -> int:
        if not (1 <= i <= self.m and 1 <= j <= self.n):
            raise GraphError(f"grid node ({i}, {j}) outside 1..{self.m} x 1..{self.n}")
        return (j - 1) * self.m + (i - 1)

    def coords(self, v: int) -> tuple[int, int]:
        if not 0 <= v < self.node_count:
            raise GraphError(f"{v} is not a grid node")
        return v % self.m + 1, v // self.m + 1

    def owner(self, edge: int) -> int:
        """Grid node whose pair ``E_v`` contains ``edge``."""
        return edge // 2


def build_modified_grid(m: int, n: int) -> ModifiedGrid:
    if m < 1 or n < 1:
        raise GraphError(f"modified grid needs m, n >= 1, got ({m}, {n})")
    v0 = m * n
    edges = []
    for j in range(1, n + 1):
        for i in range(1, m + 1):
            v = (j - 1) * m + (i - 1)
            right = v0 if i == m else v + 1
            down = v0 if j == 1 else v - m
            edges.append((v, right))
            edges.append((v, down))
    partition = tuple((2 * v, 2 * v + 1) for v in range(m * n))
    return ModifiedGrid(m, n, Graph(m * n + 1, tuple(edges)), partition)


def standard_grid(m: int, n: int) -> Graph:
    """Planar grid with m columns and n rows of vertices (mn vertices)."""
    if m < 1 or n < 1:
        raise GraphError(f"grid needs m, n >= 1, got ({m}, {n})")
    edges = []
    for j in range(n):
        for i in range(m):
            v = j * m + i
            if i + 1 < m:
                edges.append((v, v + 1))
            if j + 1 < n:
                edges.append((v, v + m))
    return Graph(m * n, tuple(edges))


# --- subgraphs and quotients ----------------------------------------------


class Subgraph(NamedTuple):
    graph: Graph
    vertex_map: tuple[int, ...]  # subgraph vertex -> parent vertex
    edge_map: tuple[int, ...]  # subgraph edge -> parent edge


class Quotient(NamedTuple):
    graph: Graph
    vertex_map: tuple[int, ...]  # parent vertex -> quotient vertex
    edge_map: tuple[int, ...]  # quotient edge -> parent edge


def induced_subgraph(g: Graph, vertices: Iterable[int]) -> Subgraph:
    keep = sorted(set(int(v) for v in vertices))
    if not keep:
        raise GraphError("induced subgraph needs a nonempty vertex set")
    if keep[0] < 0 or keep[-1] >= g.vertex_count:
        raise GraphError(f"vertex set not contained in 0..{g.vertex_count - 1}")
    local = {v: k for k, v in enumerate(keep)}
    edges, emap = [], []
    for k, (u, v) in enumerate(g.edges):
        if u in local and v in local:
            edges.append((local[u], local[v]))
            emap.append(k)
    return Subgraph(Graph(len(keep), tuple(edges)), tuple(keep), tuple(emap))


def contract_subgraph(g: Graph, core_edges: Iterable[int]) -> Quotient:
    """Merge every vertex touched by ``core_edges`` into one vertex.

    The merged vertex takes the place of the smallest merged index; the other
    vertices keep their relative order. Edges that become loops are dropped,
    parallel edges survive.
    """
    core = sorted(set(int(e) for e in core_edges))
    if not core:
        raise GraphError("contraction needs at least one core edge")
    touched = sorted({x for e in core for x in g.edges[e]})
    local = {v: k for k, v in enumerate(touched)}
    if len(components(len(touched), [(local[g.edges[e][0]], local[g.edges[e][1]]) for e in core])) != 1:
        raise GraphError(f"core edges {core} do not form a connected subgraph")
    merged = set(touched)
    rep = touched[0]
    vmap, nxt = [], 0
    for v in range(g.vertex_count):
        if v in merged and v != rep:
            vmap.append(-1)
        else:
            vmap.append(nxt)
            nxt += 1
    for v in touched[1:]:
        vmap[v] = vmap[rep]
    edges, emap = [], []
    for k, (u, v) in enumerate(g.edges):
        a, b = vmap[u], vmap[v]
        if a != b:
            edges.append((a, b))
            emap.append(k)
    return Quotient(Graph(nxt, tuple(edges)), tuple(vmap), tuple(emap))


# --- the unit-square lattice ----------------------------------------------


class SquareLattice:
    """Lattice ``(1/n)Z^2`` restricted to ``Q = (0,1] x [0,1)`` and its dual.

    Primal vertex ``(i, j)`` sits at ``(i/n, j/n)`` with ``i`` in 1..n and
    ``j`` in 0..n-1, index ``j*n + (i-1)``. Dual vertex ``(k, l)`` sits at
    ``((k-1/2)/n, (l+1/2)/n)`` with ``k`` in 1..n and ``l`` in 0..n-1, index
    ``l*n + (k-1)``. The interior nodes (``x < 1`` and ``y > 0``) are the
    nodes of ``grid``, a ``ModifiedGrid(n-1, n-1)`` sharing their ``(i, j)``
    labels; the bottom row and right column all play the role of ``v0``.
    """

    def __init__(self, n: int):
        if n < 2:
            raise GraphError(f"square lattice needs n >= 2, got {n}")
        self.n = n

    @cached_property
    def grid(self) -> ModifiedGrid:
        return build_modified_grid(self.n - 1, self.n - 1)

    @property
    def node_count(self) -> int:
        return (self.n - 1) ** 2

    def __repr__(self):
        return f"SquareLattice(n={self.n})"

    def __eq__(self, other):
        return isinstance(other, SquareLattice) and other.n == self.n

    def __hash__(self):
        return hash(("SquareLattice", self.n))

    def primal_index(self, i: int, j: int) -> int:
        return j * self.n + (i - 1)

    @cached_property
    def primal_points(self) -> np.ndarray:
        n = self.n
        j, i = np.divmod(np.arange(n * n), n)
        return np.column_stack([(i + 1) / n, j / n])

    @cached_property
    def dual_points(self) -> np.ndarray:
        n = self.n
        l, k = np.divmod(np.arange(n * n), n)
        return np.column_stack([(k + 0.5) / n, (l + 0.5) / n])

    @cached_property
    def interior_nodes(self) -> np.ndarray:
        """Coordinates of the interior nodes, in grid-node order."""
        m = self.n - 1
        j, i = np.divmod(np.arange(m * m), m)
        return np.column_stack([(i + 1) / self.n, (j + 1) / self.n])

    def is_boundary(self, i: int, j: int) -> bool:
        return j == 0 or i == self.n

    @cached_property
    def boundary_vertices(self) -> tuple[tuple[int, int], ...]:
        """Bottom row left to right, then right column bottom to top."""
        n = self.n
        return tuple((i, 0) for i in range(1, n + 1)) + tuple((n, j) for j in range(1, n))

    @cached_property
    def boundary_edges(self) -> tuple[tuple[int, int], ...]:
        n = self.n
        bottom = [(self.primal_index(i, 0), self.primal_index(i + 1, 0)) for i in range(1, n)]
        right = [(self.primal_index(n, j), self.primal_index(n, j + 1)) for j in range(n - 1)]
        return tuple(bottom + right)

    def lattice_graph(self) -> Graph:
        """All nearest-neighbour edges between lattice points of Q."""
        n = self.n
        edges = []
        for j in range(n):
            for i in range(1, n + 1):
                if i < n:
                    edges.append((self.primal_index(i, j), self.primal_index(i + 1, j)))
                if j < n - 1:
                    edges.append((self.primal_index(i, j), self.primal_index(i, j + 1)))
        return Graph(n * n, tuple(edges))

    def identified_graph(self) -> Graph:
        """Lattice graph with the bottom row and right column glued to one vertex.

        Interior node ``(i, j)`` keeps its grid index and the glued vertex is
        last, so this is directly comparable with ``self.grid.graph``.
        """
        n = self.n
        m = n - 1
        relabel = {}
        for j in range(n):
            for i in range(1, n + 1):
                p = self.primal_index(i, j)
                relabel[p] = m * m if self.is_boundary(i, j) else (j - 1) * m + (i - 1)
        edges = []
        for u, v in self.lattice_graph().edges:
            a, b = relabel[u], relabel[v]
            if a != b:
                edges.append((a, b))
        return Graph(m * m + 1, tuple(edges))

    def grid_edge_endpoints(self, edge: int) -> tuple[tuple[int, int], tuple[int, int]]:
        """Lattice coordinates ``(i, j)`` of both ends of a grid edge."""
        v, down = divmod(edge, 2)
        i, j = self.grid.coords(v)
        return ((i, j), (i, j - 1)) if down else ((i, j), (i + 1, j))

    def dual_index(self, k: int, l: int) -> int:
        return l * self.n + (k - 1)

    def dual_graph(self) -> Graph:
        """n-by-n grid on the dual vertices."""
        return self._dual_graph

    @cached_property
    def _dual_graph(self) -> Graph:
        n = self.n
        edges = []
        for l in range(n):
            for k in range(1, n + 1):
                if k < n:
                    edges.append((self.dual_index(k, l), self.dual_index(k + 1, l)))
                if l < n - 1:
                    edges.append((self.dual_index(k, l), self.dual_index(k, l + 1)))
        return Graph(n * n, tuple(edges))


def build_square_lattice(n: int) -> SquareLattice:
    return SquareLattice(n)
