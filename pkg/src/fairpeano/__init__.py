"""Fair spanning trees on grids, fairest edge usage, and the Peano curves they carry."""

from .feu import (
    FeuSolution,
    classify,
    deflate,
    densest_subgraphs,
    fair_trees,
    forbidden_tree_witness,
    is_fair_tree,
    one_density,
    partner_tree,
    solve_feu_exact,
    solve_feu_frank_wolfe,
    uniformize,
)
from .graphs import Graph, GraphError, ModifiedGrid, SquareLattice, build_graph, build_modified_grid, standard_grid
from .peano import coverage_radius, dual_tree, hausdorff_distance, peano_curve, stopping_index
from .streams import make_rng
from .trees import (
    SpanningTree,
    enumerate_spanning_trees,
    kirchhoff_edge_probabilities,
    matrix_tree_count,
    sample_fair_tree,
    sample_wust,
)

__version__ = "0.1.0"
