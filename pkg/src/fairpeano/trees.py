"""Spanning trees: tests, enumeration, Kirchhoff counts and probabilities, samplers."""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from itertools import accumulate
from typing import Iterable, Sequence

import numpy as np

from .graphs import Graph, GraphError, ModifiedGrid, components
from .streams import UniformBuffer

DEFAULT_TREE_CAP = 10**6


class TreeCapError(ValueError):
    pass


@dataclass(frozen=True)
class SpanningTree:
    graph: Graph
    edges: frozenset

    @property
    def sorted_edges(self) -> list[int]:
        return sorted(self.edges)

    def __len__(self):
        return len(self.edges)


def spanning_tree(g: Graph, edges: Iterable[int]) -> SpanningTree:
    """Wrap ``edges`` as a tree of ``g``, rejecting anything that is not one."""
    es = frozenset(int(e) for e in edges)
    if not is_spanning_tree(g, es):
        raise GraphError(f"edge set {sorted(es)} is not a spanning tree")
    return SpanningTree(g, es)


def check_weights(g: Graph, weights) -> np.ndarray:
    if weights is None:
        return np.ones(g.edge_count)
    w = np.asarray(weights, dtype=float)
    if w.shape != (g.edge_count,):
        raise GraphError(f"expected {g.edge_count} weights, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise GraphError("edge weights must be finite and strictly positive")
    return w


@dataclass(frozen=True)
class TreePmf:
    trees: tuple[SpanningTree, ...]
    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        if mass.shape != (len(self.trees),):
            raise ValueError("one mass per tree required")
        if np.any(mass < 0) or abs(mass.sum() - 1.0) > 1e-12:
            raise ValueError(f"masses must be nonnegative and sum to 1 (sum={mass.sum()!r})")
        object.__setattr__(self, "mass", mass)

    def indicator_matrix(self) -> np.ndarray:
        g = self.trees[0].graph
        N = np.zeros((len(self.trees), g.edge_count))
        for r, t in enumerate(self.trees):
            N[r, list(t.edges)] = 1.0
        return N


def is_spanning_tree(g: Graph, edge_set: Iterable[int]) -> bool:
    es = set(edge_set)
    if len(es) != g.vertex_count - 1:
        return False
    parent = list(range(g.vertex_count))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in es:
        u, v = g.edges[e]
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return True


def enumerate_spanning_trees(g: Graph, cap: int = DEFAULT_TREE_CAP) -> list[SpanningTree]:
    """All spanning trees by include/exclude branching over the edge list.

    Parallel edges are distinct trees. The order is deterministic: a tree
    containing edge ``k`` comes before any tree that excludes it but agrees
    on edges ``< k``.
    """
    if not g.is_connected():
        raise GraphError("graph is not connected")
    V, edges = g.vertex_count, g.edges
    out: list[SpanningTree] = []

    def connectable(start, comp):
        rest = [(comp[u], comp[v]) for u, v in edges[start:]]
        return len(components(V, rest + [(x, comp[x]) for x in range(V)])) == 1

    def rec(i, comp, chosen, ncomp):
        if ncomp == 1:
            if len(out) >= cap:
                raise TreeCapError(f"more than cap={cap} spanning trees")
            out.append(SpanningTree(g, frozenset(chosen)))
            return
        if i == len(edges) or not connectable(i, comp):
            return
        u, v = edges[i]
        cu, cv = comp[u], comp[v]
        if cu != cv:
            lo, hi = min(cu, cv), max(cu, cv)
            merged = [lo if c == hi else c for c in comp]
            chosen.append(i)
            rec(i + 1, merged, chosen, ncomp - 1)
            chosen.pop()
        rec(i + 1, comp, chosen, ncomp)

    rec(0, list(range(V)), [], V)
    return out


def matrix_tree_count(g: Graph, weights=None) -> float:
    """Weighted spanning-tree count as a reduced-Laplacian determinant."""
    w = check_weights(g, weights)
    if g.vertex_count == 1:
        return 1.0
    if not g.is_connected():
        return 0.0
    return float(np.linalg.det(g.laplacian(w)[1:, 1:]))


def _green(g: Graph, w: np.ndarray) -> np.ndarray:
    if not g.is_connected():
        raise GraphError("effective resistance undefined on a disconnected graph")
    V = g.vertex_count
    G = np.zeros((V, V))
    if V > 1:
        G[1:, 1:] = np.linalg.inv(g.laplacian(w)[1:, 1:])
    return G


def effective_resistances(g: Graph, weights=None) -> np.ndarray:
    """Resistance between the endpoints of every edge, conductances ``weights``."""
    w = check_weights(g, weights)
    G = _green(g, w)
    u, v = g.endpoints[:, 0], g.endpoints[:, 1]
    return G[u, u] + G[v, v] - 2 * G[u, v]


def effective_resistance(g: Graph, weights, e: int) -> float:
    return float(effective_resistances(g, weights)[e])


def kirchhoff_edge_probabilities(g: Graph, weights=None) -> np.ndarray:
    """P(e in tree) = w(e) * effR(e) for the weighted uniform spanning tree."""
    w = check_weights(g, weights)
    return w * effective_resistances(g, w)


def pmf_edge_probabilities(pmf: TreePmf) -> np.ndarray:
    return pmf.mass @ pmf.indicator_matrix()


def weighted_tree_pmf(g: Graph, weights=None, cap: int = DEFAULT_TREE_CAP) -> TreePmf:
    """The weighted-uniform pmf written out over an explicit enumeration."""
    w = check_weights(g, weights)
    trees = enumerate_spanning_trees(g, cap)
    logw = np.log(w)
    score = np.array([logw[list(t.edges)].sum() for t in trees])
    mass = np.exp(score - score.max())
    return TreePmf(tuple(trees), mass / mass.sum())


# --- samplers ---------------------------------------------------------------


def _walk_tables(g: Graph, w: np.ndarray):
    inc = g.incidence
    cum = [list(accumulate(w[e] for e, _ in inc[v])) for v in range(g.vertex_count)]
    return inc, cum


def _step(inc, cum, u, draw):
    c = cum[u]
    k = bisect_right(c, draw() * c[-1])
    if k == len(c):
        k -= 1
    return inc[u][k]


def wilson(g: Graph, w: np.ndarray, rng: np.random.Generator, root: int = 0) -> frozenset:
    inc, cum = _walk_tables(g, w)
    draw = UniformBuffer(rng)
    V = g.vertex_count
    in_tree = [False] * V
    in_tree[root] = True
    nxt_edge = [-1] * V
    nxt = [-1] * V
    tree = []
    for s in range(V):
        u = s
        while not in_tree[u]:
            nxt_edge[u], nxt[u] = _step(inc, cum, u, draw)
            u = nxt[u]
        u = s
        while not in_tree[u]:
            in_tree[u] = True
            tree.append(nxt_edge[u])
            u = nxt[u]
    return frozenset(tree)


def aldous_broder(g: Graph, w: np.ndarray, rng: np.random.Generator, root: int = 0) -> frozenset:
    inc, cum = _walk_tables(g, w)
    draw = UniformBuffer(rng)
    seen = [False] * g.vertex_count
    seen[root] = True
    left = g.vertex_count - 1
    tree = []
    u = root
    while left:
        e, v = _step(inc, cum, u, draw)
        if not seen[v]:
            seen[v] = True
            tree.append(e)
            left -= 1
        u = v
    return frozenset(tree)


SAMPLERS = {"wilson": wilson, "aldous_broder": aldous_broder}


def sample_wust(g, weights, rng: np.random.Generator, algorithm: str = "wilson") -> SpanningTree:
    """One weighted-uniform spanning tree.

    ``g`` may be a ``Graph`` (walks rooted at vertex 0) or a ``ModifiedGrid``
    (rooted at ``v0``).
    """
    if isinstance(g, ModifiedGrid):
        graph, root = g.graph, g.v0
    else:
        graph, root = g, 0
    try:
        sampler = SAMPLERS[algorithm.replace("-", "_")]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {sorted(SAMPLERS)}") from None
    w = check_weights(graph, weights)
    if not graph.is_connected():
        raise GraphError("graph is not connected")
    return SpanningTree(graph, sampler(graph, w, rng, root))


# --- fair trees on modified grids ------------------------------------------


def sample_fair_choices(node_count: int, rng: np.random.Generator) -> np.ndarray:
    """One fair coin per grid node; True (heads) picks the right edge."""
    return rng.random(node_count) < 0.5


def tree_from_choices(grid: ModifiedGrid, right: Sequence[bool]) -> SpanningTree:
    right = np.asarray(right, dtype=bool)
    if right.shape != (grid.node_count,):
        raise GraphError(f"expected {grid.node_count} choices, got shape {right.shape}")
    edges = 2 * np.arange(grid.node_count) + (~right).astype(np.int64)
    return SpanningTree(grid.graph, frozenset(edges.tolist()))


def choices_from_tree(grid: ModifiedGrid, t: SpanningTree) -> np.ndarray:
    """Inverse of ``tree_from_choices``; the tree must use one edge of every pair."""
    right = np.zeros(grid.node_count, dtype=bool)
    hits = np.zeros(grid.node_count, dtype=np.int64)
    for e in t.edges:
        v, down = divmod(e, 2)
        hits[v] += 1
        right[v] = not down
    if np.any(hits != 1):
        raise GraphError("tree does not pick exactly one edge from every E_v")
    return right


def sample_fair_tree(grid: ModifiedGrid, rng: np.random.Generator) -> SpanningTree:
    return tree_from_choices(grid, sample_fair_choices(grid.node_count, rng))
