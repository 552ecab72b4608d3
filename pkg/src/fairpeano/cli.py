"""Command-line interface: ``fairpeano <command> [options]``.

Exit status is 0 on success, 1 on bad input and 2 when an iterative solver
fails to converge.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import feu, io, scaling
from .graphs import GraphError, SquareLattice, build_modified_grid
from .peano import dual_tree, peano_curve
from .streams import make_rng
from .svg import COLOR_MODES, RenderScene, render_svg
from .trees import (
    TreeCapError,
    kirchhoff_edge_probabilities,
    sample_fair_tree,
    sample_wust,
)

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGENCE = 0, 1, 2

log = logging.getLogger("fairpeano")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _pair(text: str) -> tuple[int, int]:
    try:
        m, n = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected M,N, got {text!r}") from None
    return m, n


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _emit(text: str, out: str | None):
    if out:
        io.write_text_atomic(out, text)
    else:
        sys.stdout.write(text)


def _load_weighted(args):
    g, w = io.load_graph(args.graph)
    if getattr(args, "weights", None):
        w = io.load_weights(g, args.weights)
    return g, w


# --- commands ---------------------------------------------------------------


def cmd_sample(args) -> int:
    rng = make_rng(args.seed)
    hosts = [x for x in (args.n, args.grid, args.graph) if x is not None]
    if len(hosts) != 1:
        raise InputError("sample: give exactly one of --n, --grid, --graph")
    if args.n is not None:
        host = SquareLattice(args.n)
        grid = host.grid
    elif args.grid is not None:
        host = grid = build_modified_grid(*args.grid)
    else:
        host, _ = io.load_graph(args.graph)
        grid = None
    if args.algorithm == "fair":
        if grid is None:
            raise InputError("sample: fair trees need --n or --grid")
        t = sample_fair_tree(grid, rng)
    else:
        g = host if grid is None else grid.graph
        w = io.load_weights(g, args.weights) if args.weights else None
        t = sample_wust(grid if grid is not None else g, w, rng, args.algorithm)
    _emit(io.dumps(io.tree_to_obj(t, host)), args.out)
    return EXIT_OK


def cmd_render(args) -> int:
    tree = None
    if args.tree:
        tree, host = io.load_tree(args.tree)
        if not isinstance(host, SquareLattice):
            if hasattr(host, "m") and host.m == host.n:
                host = SquareLattice(host.n + 1)
            else:
                raise InputError(f"{args.tree}: field 'n': rendering needs a square lattice tree")
        lat = host
    elif args.n:
        lat = SquareLattice(args.n)
    else:
        raise InputError("render: give --tree or --n")
    if (args.dual or args.curve) and tree is None:
        raise InputError("render: --dual and --curve need --tree")
    dual = dual_tree(lat, tree) if tree is not None and (args.dual or args.curve) else None
    curve = peano_curve(lat, tree, dual) if args.curve else None
    scene = RenderScene(lat, tree, dual if args.dual else None, curve, args.color_mode.replace("-", "_"), size=args.size)
    _emit(render_svg(scene), args.out)
    return EXIT_OK


def cmd_probs(args) -> int:
    g, w = _load_weighted(args)
    if args.mc:
        rng = make_rng(args.seed)
        counts = np.zeros(g.edge_count)
        for _ in range(args.mc):
            t = sample_wust(g, w, rng, args.algorithm)
            counts[list(t.edges)] += 1
        probs, method = counts / args.mc, "monte_carlo"
    else:
        probs, method = kirchhoff_edge_probabilities(g, w), "kirchhoff"
    obj = {"method": method, "probabilities": [float(p) for p in probs]}
    if args.mc:
        obj["samples"] = args.mc
    _emit(io.dumps(obj), args.out)
    return EXIT_OK


def cmd_feu(args) -> int:
    g, _ = io.load_graph(args.graph)
    if args.solver == "exact":
        sol = feu.solve_feu_exact(g, tol=args.tol)
    else:
        sol = feu.solve_feu_frank_wolfe(g, tol=args.tol, max_iter=args.max_iter)
    _emit(io.dumps(sol.to_dict()), args.out)
    return EXIT_OK if sol.converged else EXIT_NONCONVERGENCE


def cmd_classify(args) -> int:
    g, _ = io.load_graph(args.graph)
    obj = {"class": feu.classify(g), "density": str(feu.one_density(g))}
    _emit(io.dumps(obj), args.out)
    return EXIT_OK


def cmd_deflate(args) -> int:
    g, _ = io.load_graph(args.graph)
    _emit(io.dumps(feu.deflate(g).to_dict()), args.out)
    return EXIT_OK


def cmd_uniformize(args) -> int:
    g, _ = io.load_graph(args.graph)
    try:
        w = feu.uniformize(g, tol=args.tol, max_iter=args.max_iter)
    except feu.NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    obj = {"weights": [float(x) for x in w], "probabilities": [float(p) for p in kirchhoff_edge_probabilities(g, w)]}
    _emit(io.dumps(obj), args.out)
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = scaling.ExperimentConfig(
        kind=args.kind, n_list=args.n_list, trials=args.trials, seed=args.seed, csv=args.csv, workers=args.workers
    )
    report = scaling.run_experiment(cfg)
    for a in report.aggregates:
        print(f"n={a.n} median={a.median:.6g} p90={a.p90:.6g} max={a.max:.6g} pass_fraction={a.pass_fraction:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fairpeano", description="Fair spanning trees, FEU and Peano curves.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sample", help="sample a fair tree or a weighted uniform spanning tree")
    s.add_argument("--n", type=int, help="square lattice size (fair tree on the (n-1)x(n-1) modified grid)")
    s.add_argument("--grid", type=_pair, help="modified grid M,N")
    s.add_argument("--graph", help="graph JSON file")
    s.add_argument("--weights", help="edge weights JSON file")
    s.add_argument("--algorithm", choices=["fair", "wilson", "aldous-broder"], default="fair")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("render", help="draw a tree, its dual and its Peano curve as SVG")
    s.add_argument("--tree")
    s.add_argument("--n", type=int, help="lattice only, when no tree is given")
    s.add_argument("--dual", action="store_true")
    s.add_argument("--curve", action="store_true")
    s.add_argument("--color-mode", choices=[c.replace("_", "-") for c in COLOR_MODES] + list(COLOR_MODES), default="plain")
    s.add_argument("--size", type=int, default=800)
    s.add_argument("--out")
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("probs", help="edge probabilities of the weighted uniform spanning tree")
    s.add_argument("--graph", required=True)
    s.add_argument("--weights")
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--mc", type=int, metavar="TRIALS")
    s.add_argument("--algorithm", choices=["wilson", "aldous-broder"], default="wilson")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_probs)

    s = sub.add_parser("feu", help="solve the fairest-edge-usage problem")
    s.add_argument("--graph", required=True)
    s.add_argument("--solver", choices=["exact", "frank-wolfe"], default="exact")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iter", type=int, default=100000)
    s.add_argument("--out")
    s.set_defaults(func=cmd_feu)

    for name, func, text in (("classify", cmd_classify, "strict / homogeneous / inhomogeneous"),
                             ("deflate", cmd_deflate, "contract minimal cores down to a point")):
        s = sub.add_parser(name, help=text)
        s.add_argument("--graph", required=True)
        s.add_argument("--out")
        s.set_defaults(func=func)

    s = sub.add_parser("uniformize", help="weights that equalise all edge probabilities")
    s.add_argument("--graph", required=True)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iter", type=int, default=10000)
    s.add_argument("--out")
    s.set_defaults(func=cmd_uniformize)

    s = sub.add_parser("experiment", help="Monte Carlo experiment with CSV output")
    s.add_argument("--kind", choices=["diagonality", "convergence", "rw-max", "rw_max"], required=True)
    s.add_argument("--n-list", type=_int_list, required=True)
    s.add_argument("--trials", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--csv")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except feu.NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (InputError, GraphError, TreeCapError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
