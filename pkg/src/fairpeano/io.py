"""JSON files for graphs, edge weights and spanning trees."""

from __future__ import annotations

import json
import os
import tempfile
from typing import Any

import numpy as np

from .graphs import Graph, GraphError, ModifiedGrid, SquareLattice, build_modified_grid
from .trees import SpanningTree, check_weights, is_spanning_tree

TREE_FORMAT = 1


class FileFormatError(ValueError):
    """A malformed input file; ``field`` names the offending key."""

    def __init__(self, path: str, field: str, message: str):
        super().__init__(f"{path}: field '{field}': {message}")
        self.path = path
        self.field = field


def read_json(path: str) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FileFormatError(path, "<document>", f"invalid JSON ({exc.msg} at line {exc.lineno})") from None


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def write_text_atomic(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _int(path, name, value, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise FileFormatError(path, name, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise FileFormatError(path, name, f"must be >= {minimum}, got {value}")
    return value


def graph_from_obj(obj, path: str = "<graph>") -> tuple[Graph, np.ndarray | None]:
    """``{"vertex_count": V, "edges": [[u, v], ...], "weights": [...]?}``."""
    if not isinstance(obj, dict):
        raise FileFormatError(path, "<document>", "expected a JSON object")
    for key in ("vertex_count", "edges"):
        if key not in obj:
            raise FileFormatError(path, key, "missing")
    V = _int(path, "vertex_count", obj["vertex_count"], 1)
    edges = obj["edges"]
    if not isinstance(edges, list):
        raise FileFormatError(path, "edges", "expected a list of [u, v] pairs")
    pairs = []
    for k, e in enumerate(edges):
        if not (isinstance(e, list) and len(e) == 2):
            raise FileFormatError(path, f"edges[{k}]", f"expected [u, v], got {e!r}")
        pairs.append((_int(path, f"edges[{k}][0]", e[0]), _int(path, f"edges[{k}][1]", e[1])))
    try:
        g = Graph(V, tuple(pairs))
    except GraphError as exc:
        raise FileFormatError(path, "edges", str(exc)) from None
    w = None
    if "weights" in obj:
        w = weights_from_obj(g, obj["weights"], path)
    return g, w


def weights_from_obj(g: Graph, obj, path: str = "<weights>") -> np.ndarray:
    values = obj["weights"] if isinstance(obj, dict) and "weights" in obj else obj
    if not isinstance(values, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in values):
        raise FileFormatError(path, "weights", "expected a list of numbers")
    try:
        return check_weights(g, values)
    except GraphError as exc:
        raise FileFormatError(path, "weights", str(exc)) from None


def graph_to_obj(g: Graph, weights=None) -> dict:
    obj = {"vertex_count": g.vertex_count, "edges": [list(e) for e in g.edges]}
    if weights is not None:
        obj["weights"] = [float(x) for x in weights]
    return obj


def load_graph(path: str) -> tuple[Graph, np.ndarray | None]:
    return graph_from_obj(read_json(path), path)


def load_weights(g: Graph, path: str) -> np.ndarray:
    return weights_from_obj(g, read_json(path), path)


# --- trees -----------------------------------------------------------------


def tree_to_obj(t: SpanningTree, host) -> dict:
    """``host`` is a SquareLattice, a ModifiedGrid or a plain Graph."""
    obj: dict[str, Any] = {"format": TREE_FORMAT}
    if isinstance(host, SquareLattice):
        obj["n"] = host.n
    elif isinstance(host, ModifiedGrid):
        obj["grid"] = [host.m, host.n]
    else:
        obj["graph"] = graph_to_obj(host)
    obj["edges"] = t.sorted_edges
    return obj


def tree_from_obj(obj, path: str = "<tree>"):
    """Returns ``(tree, host)`` with the host as in ``tree_to_obj``."""
    if not isinstance(obj, dict):
        raise FileFormatError(path, "<document>", "expected a JSON object")
    if obj.get("format") != TREE_FORMAT:
        raise FileFormatError(path, "format", f"expected {TREE_FORMAT}, got {obj.get('format')!r}")
    hosts = [k for k in ("n", "grid", "graph") if k in obj]
    if len(hosts) != 1:
        raise FileFormatError(path, "n", "exactly one of 'n', 'grid', 'graph' must be given")
    if "n" in obj:
        host = SquareLattice(_int(path, "n", obj["n"], 2))
        graph = host.grid.graph
    elif "grid" in obj:
        dims = obj["grid"]
        if not (isinstance(dims, list) and len(dims) == 2):
            raise FileFormatError(path, "grid", "expected [m, n]")
        host = build_modified_grid(_int(path, "grid[0]", dims[0], 1), _int(path, "grid[1]", dims[1], 1))
        graph = host.graph
    else:
        host, _ = graph_from_obj(obj["graph"], f"{path}:graph")
        graph = host
    if "edges" not in obj:
        raise FileFormatError(path, "edges", "missing")
    edges = obj["edges"]
    if not isinstance(edges, list):
        raise FileFormatError(path, "edges", "expected a list of edge indices")
    for k, e in enumerate(edges):
        _int(path, f"edges[{k}]", e, 0)
        if e >= graph.edge_count:
            raise FileFormatError(path, f"edges[{k}]", f"edge index {e} out of range (graph has {graph.edge_count})")
    if not is_spanning_tree(graph, edges):
        raise FileFormatError(path, "edges", "edge set is not a spanning tree")
    return SpanningTree(graph, frozenset(edges)), host


def load_tree(path: str):
    return tree_from_obj(read_json(path), path)
