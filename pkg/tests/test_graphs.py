from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairpeano.graphs import (
    GraphError,
    SquareLattice,
    build_graph,
    build_modified_grid,
    build_square_lattice,
    contract_subgraph,
    induced_subgraph,
    standard_grid,
)
from fairpeano.feu import one_density
from oracles import to_networkx

dims = st.integers(min_value=1, max_value=7)


def test_build_graph_keeps_edge_order():
    g = build_graph(3, [(2, 1), (0, 1), (1, 0)])
    assert g.edges == ((2, 1), (0, 1), (1, 0))
    assert build_graph(2, [(0, 1), (0, 1)]).edge_count == 2


def test_self_loop_rejected_with_index():
    with pytest.raises(GraphError, match="edge 1"):
        build_graph(2, [(0, 1), (0, 0)])


def test_endpoint_out_of_range_rejected():
    with pytest.raises(GraphError):
        build_graph(2, [(0, 2)])


@pytest.mark.parametrize("m,n,V,E", [(3, 3, 10, 18), (1, 1, 2, 2), (2, 2, 5, 8)])
def test_modified_grid_sizes(m, n, V, E):
    grid = build_modified_grid(m, n)
    assert (grid.graph.vertex_count, grid.graph.edge_count) == (V, E)
    assert len(grid.partition) == m * n


def test_modified_grid_rejects_zero():
    with pytest.raises(GraphError):
        build_modified_grid(0, 3)


@given(dims, dims)
def test_modified_grid_structure(m, n):
    grid = build_modified_grid(m, n)
    g = grid.graph
    assert g.edge_count == 2 * (g.vertex_count - 1)
    assert one_density(g).value == 2
    cells = [e for pair in grid.partition for e in pair]
    assert sorted(cells) == list(range(g.edge_count))
    for v in range(grid.node_count):
        i, j = grid.coords(v)
        assert grid.index(i, j) == v
        right, down = (g.edges[e] for e in grid.partition[v])
        assert right == (v, grid.v0 if i == m else grid.index(i + 1, j))
        assert down == (v, grid.v0 if j == 1 else grid.index(i, j - 1))
    corner = grid.index(m, 1)
    assert sum(1 for e in g.edges if set(e) == {corner, grid.v0}) == 2


def test_modified_grid_matches_identified_big_grid():
    # an (m+1)x(n+1) grid with its bottom row and right column glued to one vertex
    for m, n in [(1, 1), (2, 3), (3, 2), (4, 4)]:
        big = nx.grid_2d_graph(m + 1, n + 1)  # nodes (x, y), x in 0..m, y in 0..n
        h = nx.MultiGraph()
        glue = lambda p: "v0" if p[0] == m or p[1] == 0 else p
        for a, b in big.edges:
            if glue(a) != glue(b):
                h.add_edge(glue(a), glue(b))
        ours = to_networkx(build_modified_grid(m, n).graph)
        assert h.number_of_edges() == ours.number_of_edges()
        assert nx.is_isomorphic(h, ours)


@pytest.mark.parametrize("n,primal,interior", [(5, 25, 16), (2, 4, 1), (3, 9, 4)])
def test_square_lattice_counts(n, primal, interior):
    lat = build_square_lattice(n)
    assert len(lat.primal_points) == primal
    assert len(lat.interior_nodes) == interior
    assert len(lat.dual_points) == n * n
    assert len(lat.boundary_vertices) == 2 * n - 1


def test_square_lattice_interior_coordinates_n3():
    got = {tuple(np.round(p * 3).astype(int)) for p in build_square_lattice(3).interior_nodes}
    assert got == {(1, 1), (1, 2), (2, 1), (2, 2)}


def test_square_lattice_rejects_small():
    with pytest.raises(GraphError):
        build_square_lattice(1)


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_identified_lattice_is_the_modified_grid(n):
    lat = SquareLattice(n)
    glued = lat.identified_graph()
    assert sorted(map(sorted, glued.edges)) == sorted(map(sorted, lat.grid.graph.edges))
    assert nx.is_isomorphic(to_networkx(glued), to_networkx(lat.grid.graph))


def test_lattice_points_in_half_open_square():
    pts = SquareLattice(4).primal_points
    assert np.all((pts[:, 0] > 0) & (pts[:, 0] <= 1) & (pts[:, 1] >= 0) & (pts[:, 1] < 1))


def test_dual_graph_is_grid():
    g = SquareLattice(4).dual_graph()
    assert nx.is_isomorphic(to_networkx(g), nx.grid_2d_graph(4, 4))


def test_induced_subgraph_examples():
    tri = build_graph(3, [(0, 1), (1, 2), (2, 0)])
    sub = induced_subgraph(tri, [0, 1])
    assert sub.graph.edge_count == 1 and sub.edge_map == (0,)
    grid = build_modified_grid(2, 2)
    digon = induced_subgraph(grid.graph, [grid.index(2, 1), grid.v0])
    assert digon.graph.vertex_count == 2 and digon.graph.edge_count == 2
    g = standard_grid(3, 3)
    whole = induced_subgraph(g, range(9))
    assert whole.edge_map == tuple(range(g.edge_count))
    with pytest.raises(GraphError):
        induced_subgraph(tri, [])


def test_contract_examples():
    digon = build_graph(2, [(0, 1), (0, 1)])
    q = contract_subgraph(digon, [0, 1])
    assert (q.graph.vertex_count, q.graph.edge_count) == (1, 0)

    grid = build_modified_grid(1, 2)
    bottom = grid.partition[grid.index(1, 1)]
    q = contract_subgraph(grid.graph, bottom)
    assert (q.graph.vertex_count, q.graph.edge_count) == (2, 2)
    assert set(q.edge_map) == set(grid.partition[grid.index(1, 2)])

    tri = build_graph(3, [(0, 1), (1, 2), (2, 0)])
    q = contract_subgraph(tri, [0])
    assert q.graph.vertex_count == 2 and q.graph.edge_count == 2
    assert set(q.graph.edges[0]) == set(q.graph.edges[1])


def test_contract_rejects_disconnected_core():
    g = build_graph(4, [(0, 1), (1, 2), (2, 3)])
    with pytest.raises(GraphError):
        contract_subgraph(g, [0, 2])


@settings(max_examples=60)
@given(st.integers(2, 7), st.data())
def test_contraction_invariants(V, data):
    pairs = [(u, v) for u in range(V) for v in range(u + 1, V)]
    edges = data.draw(st.lists(st.sampled_from(pairs), min_size=1, max_size=12))
    g = build_graph(V, edges)
    start = data.draw(st.integers(0, g.edge_count - 1))
    # grow a connected core from one edge
    core, touched = {start}, set(g.edges[start])
    for e, (u, v) in enumerate(g.edges):
        if data.draw(st.booleans()) and (u in touched or v in touched):
            core.add(e)
            touched |= {u, v}
    q = contract_subgraph(g, core)
    assert all(a != b for a, b in q.graph.edges)
    assert q.graph.vertex_count == V - (len(touched) - 1)
    inside = sum(1 for u, v in g.edges if u in touched and v in touched)
    assert q.graph.edge_count == g.edge_count - inside
    for qe, pe in enumerate(q.edge_map):
        u, v = g.edges[pe]
        assert (q.vertex_map[u], q.vertex_map[v]) in (q.graph.edges[qe], q.graph.edges[qe][::-1])


@pytest.mark.parametrize("m,n,expected", [(2, 2, Fraction(4, 3)), (2, 3, Fraction(7, 5)), (3, 3, Fraction(12, 8))])
def test_standard_grid_density(m, n, expected):
    g = standard_grid(m, n)
    assert g.vertex_count == m * n
    assert g.edge_count == 2 * m * n - m - n
    assert one_density(g).value == expected


def test_one_density_examples():
    assert one_density(build_modified_grid(3, 3).graph).value == 2
    assert one_density(build_graph(3, [(0, 1), (1, 2), (2, 0)])).value == Fraction(3, 2)
    with pytest.raises(GraphError):
        one_density(build_graph(1, []))
