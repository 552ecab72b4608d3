"""Fairest edge usage (FEU) and the density theory around it.

FEU picks a pmf on spanning trees minimising the variance of the edge-usage
probabilities. The optimal edge vector ``eta*`` is unique, the pmf is not.
The structural side rests on the 1-density ``|E| / (|V| - 1)``: densest
connected vertex-induced subgraphs, minimal cores and deflation by
contracting them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog

from .graphs import Graph, GraphError, ModifiedGrid, contract_subgraph, induced_subgraph
from .trees import (
    DEFAULT_TREE_CAP,
    SpanningTree,
    TreePmf,
    check_weights,
    enumerate_spanning_trees,
    is_spanning_tree,
    kirchhoff_edge_probabilities,
)

log = logging.getLogger(__name__)

BRUTE_FORCE_MAX_VERTICES = 16
HOMOGENEITY_TOL = 1e-8


class NonConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (final residual {residual:.3e})")
        self.residual = residual


# --- density ----------------------------------------------------------------


@dataclass(frozen=True)
class Density:
    edges: int
    denominator: int

    def __post_init__(self):
        if self.denominator < 1:
            raise GraphError("1-density needs at least two vertices")

    @property
    def value(self) -> Fraction:
        return Fraction(self.edges, self.denominator)

    def __float__(self):
        return self.edges / self.denominator

    def __str__(self):
        return f"{self.edges}/{self.denominator}"


def one_density(g: Graph) -> Density:
    if g.vertex_count < 2:
        raise GraphError("1-density is undefined for a single vertex")
    return Density(g.edge_count, g.vertex_count - 1)


def _mask_connected(mask: int, adj: list[int]) -> bool:
    start = mask & -mask
    seen = start
    frontier = start
    while frontier:
        low = frontier & -frontier
        frontier ^= low
        nb = adj[low.bit_length() - 1] & mask & ~seen
        seen |= nb
        frontier |= nb
    return seen == mask


def _mask_vertices(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


class _SubsetScan:
    """Edge and vertex counts of every vertex-induced subgraph, as bitmask arrays."""

    def __init__(self, g: Graph, max_vertices: int):
        V = g.vertex_count
        if V > max_vertices:
            raise GraphError(
                f"{V} vertices exceeds the brute-force bound of {max_vertices}; use solve_feu_frank_wolfe instead"
            )
        self.g = g
        self.full = (1 << V) - 1
        S = np.arange(1 << V, dtype=np.int64)
        self.masks = S
        self.nv = np.zeros(S.size, dtype=np.int64)
        for i in range(V):
            self.nv += (S >> i) & 1
        self.ne = np.zeros(S.size, dtype=np.int64)
        for u, v in g.edges:
            self.ne += ((S >> u) & (S >> v)) & 1
        self.adj = [0] * V
        for u, v in g.edges:
            self.adj[u] |= 1 << v
            self.adj[v] |= 1 << u

    def best(self, exclude_full: bool = False) -> Fraction | None:
        ok = self.ne > 0
        if exclude_full:
            ok &= self.masks != self.full
        if not ok.any():
            return None
        idx = np.flatnonzero(ok)
        k = idx[np.argmax(self.ne[idx] / (self.nv[idx] - 1))]
        return Fraction(int(self.ne[k]), int(self.nv[k] - 1))

    def attaining(self, theta: Fraction, exclude_full: bool = False) -> list[int]:
        """Connected subsets with density exactly ``theta``, by increasing mask."""
        hit = (self.ne > 0) & (self.ne * theta.denominator == theta.numerator * (self.nv - 1))
        if exclude_full:
            hit &= self.masks != self.full
        return [int(s) for s in self.masks[hit] if _mask_connected(int(s), self.adj)]


class DensestSubgraphs(NamedTuple):
    density: Fraction
    maximizers: list[tuple[int, ...]]  # vertex sets, each inducing a connected subgraph
    minimal: list[tuple[int, ...]]  # maximizers with no maximizing proper subset


def densest_subgraphs(g: Graph, max_vertices: int = BRUTE_FORCE_MAX_VERTICES) -> DensestSubgraphs:
    if g.edge_count == 0:
        raise GraphError("graph has no edges")
    scan = _SubsetScan(g, max_vertices)
    theta = scan.best()
    masks = scan.attaining(theta)
    minimal = [s for s in masks if not any(t != s and t & s == t for t in masks)]
    by_vertices = lambda ms: sorted((_mask_vertices(s) for s in ms))
    return DensestSubgraphs(theta, by_vertices(masks), by_vertices(minimal))


STRICT = "strictly_1_dense"
HOMOGENEOUS = "homogeneous_not_strict"
INHOMOGENEOUS = "inhomogeneous"


def classify(g: Graph, tol: float = HOMOGENEITY_TOL, solution: "FeuSolution | None" = None,
             max_vertices: int = BRUTE_FORCE_MAX_VERTICES) -> str:
    """Strictly 1-dense, homogeneous but not strict, or inhomogeneous.

    Within the brute-force bound the answer is combinatorial: compare the
    densest proper subgraph with the whole graph (an inhomogeneous graph
    always has a core denser than itself). Beyond the bound a supplied FEU
    solution decides homogeneity and strictness cannot be certified.
    """
    if g.vertex_count <= max_vertices:
        theta = one_density(g).value
        best = _SubsetScan(g, max_vertices).best(exclude_full=True)
        if best is None or best < theta:
            return STRICT
        return HOMOGENEOUS if best == theta else INHOMOGENEOUS
    if solution is None:
        raise GraphError(f"{g.vertex_count} vertices exceeds the brute-force bound; pass an FEU solution")
    if np.ptp(solution.eta) > tol:
        return INHOMOGENEOUS
    raise GraphError("homogeneous graph beyond the brute-force bound: strictness cannot be decided")


def is_biconnected(g: Graph) -> bool:
    if g.vertex_count < 2 or not g.is_connected():
        return False
    if g.vertex_count == 2:
        return True
    for x in range(g.vertex_count):
        rest = [v for v in range(g.vertex_count) if v != x]
        if not induced_subgraph(g, rest).graph.is_connected():
            return False
    return True


# --- FEU solvers ------------------------------------------------------------


@dataclass
class FeuSolution:
    eta: np.ndarray
    variance: float
    witness_pmf: TreePmf
    homogeneous: bool
    converged: bool = True
    iterations: int = 0
    gap: float = 0.0

    def to_dict(self) -> dict:
        return {
            "eta": [float(x) for x in self.eta],
            "variance": float(self.variance),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "gap": float(self.gap),
            "homogeneous": bool(self.homogeneous),
        }


def _finish(g, points, trees, lam, iterations, gap, converged):
    keep = lam > 0
    lam = lam[keep] / lam[keep].sum()
    kept = [t for t, k in zip(trees, keep) if k]
    eta = lam @ points[keep]
    pmf = TreePmf(tuple(SpanningTree(g, t) if not isinstance(t, SpanningTree) else t for t in kept), lam)
    return FeuSolution(
        eta=eta,
        variance=float(np.var(eta)),
        witness_pmf=pmf,
        homogeneous=bool(np.ptp(eta) <= HOMOGENEITY_TOL),
        converged=converged,
        iterations=iterations,
        gap=float(gap),
    )


def _affine_min(P: np.ndarray) -> np.ndarray:
    """Weights ``a`` (summing to 1) minimising ``||a @ P||`` over the affine hull of the rows."""
    k = P.shape[0]
    A = np.zeros((k + 1, k + 1))
    A[:k, :k] = P @ P.T
    A[:k, k] = 1.0
    A[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
    return sol[:k]


def _var_gap(x, s, E):
    return float(2.0 / E * (x - x.mean()) @ (x - s))


def solve_feu_exact(g: Graph, tol: float = 1e-12, cap: int = DEFAULT_TREE_CAP, max_iter: int = 100000) -> FeuSolution:
    """FEU over an explicit tree enumeration, by Wolfe's minimum-norm-point method.

    Minimising the variance over the hull of tree indicator vectors is the
    same as minimising ``||eta||`` (the mean is fixed at ``(|V|-1)/|E|``).
    Wolfe's active-set method solves that exactly in finitely many steps; the
    reported gap is the variance duality gap over all enumerated trees.
    """
    trees = enumerate_spanning_trees(g, cap)
    E = g.edge_count
    P = np.zeros((len(trees), E))
    for r, t in enumerate(trees):
        P[r, list(t.edges)] = 1.0
    eps = 1e-13

    S = [int(np.argmin((P * P).sum(axis=1)))]
    lam = np.array([1.0])
    x = P[S[0]].copy()
    it = 0
    gap = np.inf
    while it < max_iter:
        it += 1
        j = int(np.argmin(P @ x))
        gap = _var_gap(x, P[j], E)
        if gap <= tol or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            a = _affine_min(P[S])
            if np.all(a > eps):
                lam = a
                x = a @ P[S]
                break
            neg = a <= eps
            theta = np.min(lam[neg] / (lam[neg] - a[neg]))
            lam = theta * a + (1 - theta) * lam
            lam[lam < eps] = 0.0
            S = [s for s, l in zip(S, lam) if l > 0]
            lam = lam[lam > 0]
            lam /= lam.sum()
            x = lam @ P[S]
    gap = max(_var_gap(x, P[int(np.argmin(P @ x))], E), 0.0)
    full = np.zeros(len(trees))
    full[S] = lam
    return _finish(g, P, trees, full, it, gap, gap <= tol)


def minimum_spanning_tree(g: Graph, weights: np.ndarray) -> list[int]:
    """Kruskal; ties go to the smaller edge index."""
    order = np.argsort(weights, kind="stable")
    parent = list(range(g.vertex_count))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    out = []
    for e in order:
        u, v = g.edges[e]
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            out.append(int(e))
            if len(out) == g.vertex_count - 1:
                break
    return out


def solve_feu_frank_wolfe(g: Graph, tol: float = 1e-8, max_iter: int = 100000, away_steps: bool = True) -> FeuSolution:
    """Conditional gradient for FEU with a minimum-spanning-tree oracle.

    The iterate is kept as an explicit convex combination of trees. Each step
    calls Kruskal on the gradient ``2(eta - mean)/|E|`` and line-searches
    exactly on the quadratic. With ``away_steps`` the step may instead move
    mass off the worst active tree, which gives linear convergence when the
    optimum sits on a face of the tree polytope (the usual case). Stops once
    the duality gap is at most ``tol``; otherwise ``converged`` is False.
    """
    if not g.is_connected():
        raise GraphError("graph is not connected")
    E = g.edge_count
    mean = (g.vertex_count - 1) / E

    def indicator(es):
        v = np.zeros(E)
        v[list(es)] = 1.0
        return v

    first = frozenset(minimum_spanning_tree(g, np.zeros(E)))
    active = {first: 1.0}
    vecs = {first: indicator(first)}
    x = vecs[first].copy()
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        grad = 2.0 / E * (x - mean)
        s_set = frozenset(minimum_spanning_tree(g, grad))
        if s_set not in vecs:
            vecs[s_set] = indicator(s_set)
        s = vecs[s_set]
        gap = float(grad @ (x - s))
        if gap <= tol:
            break
        d, gmax, away = s - x, 1.0, None
        if away_steps and len(active) > 1:
            away = max(active, key=lambda t: (float(grad @ vecs[t]), sorted(t)))
            if float(grad @ (vecs[away] - x)) > gap:
                lam_a = active[away]
                d, gmax = x - vecs[away], lam_a / (1.0 - lam_a)
            else:
                away = None
        dd = float(d @ d)
        step = min(gmax, max(0.0, -float(x @ d) / dd)) if dd > 0 else 0.0
        if away is None:
            for t in active:
                active[t] *= 1.0 - step
            active[s_set] = active.get(s_set, 0.0) + step
        else:
            for t in active:
                active[t] *= 1.0 + step
            active[away] -= step
        active = {t: l for t, l in active.items() if l > 1e-15}
        total = sum(active.values())
        active = {t: l / total for t, l in active.items()}
        x = sum(l * vecs[t] for t, l in active.items())
    else:
        grad = 2.0 / E * (x - mean)
        gap = float(grad @ (x - indicator(minimum_spanning_tree(g, grad))))
    converged = gap <= tol
    if not converged:
        log.warning("Frank-Wolfe stopped after %d iterations with gap %.3e > %.1e", it, gap, tol)
    trees = list(active)
    P = np.array([vecs[t] for t in trees])
    return _finish(g, P, trees, np.array([active[t] for t in trees]), it, max(gap, 0.0), converged)


def fair_trees(g: Graph, solution: FeuSolution | None = None, cap: int = DEFAULT_TREE_CAP,
               tol: float = 1e-9) -> list[SpanningTree]:
    """Trees lying in the support of some FEU-optimal pmf.

    Only trees on the supporting hyperplane ``<eta*, 1_T> = ||eta*||^2`` can
    carry optimal mass. Among those, repeated LPs maximise the mass placed on
    trees not yet known to be fair, subject to reproducing ``eta*``, until no
    new tree can receive positive mass.
    """
    if solution is None:
        solution = solve_feu_exact(g, cap=cap)
    eta = solution.eta
    trees = enumerate_spanning_trees(g, cap)
    P = np.zeros((len(trees), g.edge_count))
    for r, t in enumerate(trees):
        P[r, list(t.edges)] = 1.0
    score = P @ eta
    cand = np.flatnonzero(score <= score.min() + 1e-7)
    Pc = P[cand]
    A_eq = np.vstack([Pc.T, np.ones(len(cand))])
    b_eq = np.append(eta, 1.0)
    fair = np.zeros(len(cand), dtype=bool)
    while not fair.all():
        c = -(~fair).astype(float)
        res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        if res.status != 0:
            raise RuntimeError(f"fair-support LP failed: {res.message}")
        new = (res.x > tol) & ~fair
        if not new.any():
            break
        fair |= new
    return [trees[i] for i in cand[fair]]


# --- deflation --------------------------------------------------------------


@dataclass
class DeflationStage:
    graph: Graph  # the graph this stage deflates
    core_vertices: tuple[int, ...]
    core_edges: tuple[int, ...]  # indices into ``graph``
    core_edges_original: tuple[int, ...]  # indices into the input graph
    density: Density
    quotient: Graph
    edge_map: tuple[int, ...]  # quotient edge -> stage edge

    @property
    def core(self) -> Graph:
        return induced_subgraph(self.graph, self.core_vertices).graph

    def is_digon(self) -> bool:
        return len(self.core_vertices) == 2 and len(self.core_edges) == 2


@dataclass
class DeflationSequence:
    graph: Graph
    stages: list[DeflationStage] = field(default_factory=list)

    @property
    def final(self) -> Graph:
        return self.stages[-1].quotient if self.stages else self.graph

    def to_dict(self) -> dict:
        return {
            "stages": [
                {
                    "core_vertices": list(s.core_vertices),
                    "core_edges": list(s.core_edges_original),
                    "density": str(s.density),
                    "quotient_vertices": s.quotient.vertex_count,
                    "quotient_edges": s.quotient.edge_count,
                }
                for s in self.stages
            ]
        }


class DeflationError(GraphError):
    def __init__(self, message, partial: DeflationSequence):
        super().__init__(message)
        self.partial = partial


def deflate(g: Graph, max_vertices: int = BRUTE_FORCE_MAX_VERTICES) -> DeflationSequence:
    """Contract minimal cores until a single vertex is left.

    A strictly 1-dense stage graph is its own minimal core, so the last
    stage contracts whatever is left (for a modified grid, the final digon).
    Ties between minimal cores go to the lexicographically smallest vertex set.
    """
    seq = DeflationSequence(g)
    cur = g
    to_orig = tuple(range(g.edge_count))
    while cur.vertex_count > 1:
        try:
            res = densest_subgraphs(cur, max_vertices)
        except GraphError as exc:
            raise DeflationError(f"stage {len(seq.stages) + 1}: {exc}", seq) from exc
        core_v = res.minimal[0]
        sub = induced_subgraph(cur, core_v)
        q = contract_subgraph(cur, sub.edge_map)
        seq.stages.append(
            DeflationStage(
                graph=cur,
                core_vertices=core_v,
                core_edges=sub.edge_map,
                core_edges_original=tuple(to_orig[e] for e in sub.edge_map),
                density=one_density(sub.graph),
                quotient=q.graph,
                edge_map=q.edge_map,
            )
        )
        to_orig = tuple(to_orig[e] for e in q.edge_map)
        cur = q.graph
    return seq


# --- fair trees on modified grids ------------------------------------------


def _pair_counts(grid: ModifiedGrid, t: SpanningTree) -> np.ndarray:
    counts = np.zeros(grid.node_count, dtype=np.int64)
    for e in t.edges:
        counts[grid.owner(e)] += 1
    return counts


def _require_spanning(grid: ModifiedGrid, t: SpanningTree):
    if not is_spanning_tree(grid.graph, t.edges):
        raise GraphError("edge set is not a spanning tree of the modified grid")


def is_fair_tree(grid: ModifiedGrid, t: SpanningTree) -> bool:
    _require_spanning(grid, t)
    return bool(np.all(_pair_counts(grid, t) == 1))


def partner_tree(grid: ModifiedGrid, t: SpanningTree) -> SpanningTree:
    """Swap the chosen edge of every pair ``E_v`` for the other one."""
    if not is_fair_tree(grid, t):
        raise GraphError("partner tree is only defined for fair trees")
    return SpanningTree(grid.graph, frozenset(e ^ 1 for e in t.edges))


def forbidden_tree_witness(grid: ModifiedGrid, t: SpanningTree) -> tuple[int, int] | None:
    """Nodes ``(v_star, v_sub)`` with both, resp. neither, of their edges in ``t``."""
    _require_spanning(grid, t)
    counts = _pair_counts(grid, t)
    if np.all(counts == 1):
        return None
    return int(np.flatnonzero(counts == 2)[0]), int(np.flatnonzero(counts == 0)[0])


# --- uniformization ---------------------------------------------------------


def uniformize(g: Graph, tol: float = 1e-10, max_iter: int = 10000, damping: float = 0.5,
               initial=None, check: bool = True) -> np.ndarray:
    """Edge weights whose weighted-uniform tree has constant edge probabilities.

    Damped multiplicative fixed point on log-weights,
    ``log w += damping * (log target - log p(w))``, renormalised each sweep
    to geometric mean 1. Converges when every edge probability is within
    ``tol`` of ``(|V|-1)/|E|``.
    """
    if check:
        if not is_biconnected(g):
            raise GraphError("uniformize requires a biconnected graph")
        if g.vertex_count <= BRUTE_FORCE_MAX_VERTICES and classify(g) != STRICT:
            raise GraphError("uniformize requires a strictly 1-dense graph")
    target = (g.vertex_count - 1) / g.edge_count
    logw = np.zeros(g.edge_count) if initial is None else np.log(check_weights(g, initial))
    logw -= logw.mean()
    resid = np.inf
    for _ in range(max_iter):
        p = kirchhoff_edge_probabilities(g, np.exp(logw))
        resid = float(np.max(np.abs(p - target)))
        if resid <= tol:
            return np.exp(logw)
        logw += damping * (np.log(target) - np.log(p))
        logw -= logw.mean()
    raise NonConvergenceError(f"uniformize did not converge in {max_iter} sweeps", resid)
