"""SVG pictures of fair trees, dual trees and Peano curves on the unit square."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import GraphError, SquareLattice
from .peano import DualTree, LatticeCurve
from .trees import SpanningTree, choices_from_tree

COLOR_MODES = ("plain", "closest_boundary_vertex")
GOLDEN_ANGLE = 137.50776405003785


@dataclass
class RenderScene:
    lattice: SquareLattice
    tree: SpanningTree | None = None
    dual: DualTree | None = None
    curve: LatticeCurve | None = None
    color_mode: str = "plain"
    tree_width: float = 2.0
    dual_width: float = 1.5
    curve_width: float = 1.0
    size: int = 800

    def validate(self):
        if self.size < 64:
            raise ValueError(f"canvas must be at least 64 px, got {self.size}")
        if self.color_mode not in COLOR_MODES:
            raise ValueError(f"color_mode must be one of {COLOR_MODES}, got {self.color_mode!r}")
        if self.tree is not None and self.tree.graph != self.lattice.grid.graph:
            raise GraphError("tree does not live on the scene's lattice")
        if self.dual is not None and self.dual.lattice != self.lattice:
            raise GraphError("dual tree does not live on the scene's lattice")
        if self.curve is not None and self.curve.n != self.lattice.n:
            raise GraphError("curve does not live on the scene's lattice")


def boundary_targets(lat: SquareLattice, right: np.ndarray) -> np.ndarray:
    """For each grid node, the index in ``lat.boundary_vertices`` reached by right/down steps."""
    n, m = lat.n, lat.n - 1
    reach = np.empty(m * m, dtype=np.int64)
    # the successor of (i, j) is (i+1, j) or (i, j-1): fill rows bottom-up, each row right to left
    for j in range(1, n):
        for i in range(m, 0, -1):
            v = (j - 1) * m + (i - 1)
            if right[v]:
                reach[v] = n - 1 + j if i + 1 == n else reach[v + 1]
            else:
                reach[v] = i - 1 if j == 1 else reach[v - m]
    return reach


def hue_color(index: int) -> str:
    return f"hsl({(index * GOLDEN_ANGLE) % 360:.1f},70%,42%)"


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_svg(scene: RenderScene) -> str:
    scene.validate()
    lat, n = scene.lattice, scene.lattice.n
    margin = scene.size * 0.04
    scale = scene.size - 2 * margin

    def xy(x, y):
        return _fmt(margin + x * scale), _fmt(margin + (1.0 - y) * scale)

    def segs(pairs):
        out = []
        for (x0, y0), (x1, y1) in pairs:
            a, b = xy(x0, y0)
            c, d = xy(x1, y1)
            out.append(f"M{a} {b}L{c} {d}")
        return "".join(out)

    size = scene.size
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    r = _fmt(max(0.6, min(2.5, scale / n / 10)))
    dots = "".join(f'<circle cx="{a}" cy="{b}" r="{r}"/>' for a, b in (xy(x, y) for x, y in lat.primal_points))
    lines.append(f'<g fill="#999">{dots}</g>')

    if scene.dual is not None:
        pts = [(((k - 0.5) / n, (l + 0.5) / n), ((k2 - 0.5) / n, (l2 + 0.5) / n)) for (k, l), (k2, l2) in scene.dual.segments()]
        lines.append(f'<path d="{segs(pts)}" stroke="#9a9a9a" stroke-width="{_fmt(scene.dual_width)}" fill="none"/>')

    if scene.tree is not None:
        border = [((i / n, 0.0), ((i + 1) / n, 0.0)) for i in range(1, n)]
        border += [((1.0, j / n), (1.0, (j + 1) / n)) for j in range(n - 1)]
        groups: dict[int, list] = {}
        reach = None
        if scene.color_mode == "closest_boundary_vertex":
            reach = boundary_targets(lat, choices_from_tree(lat.grid, scene.tree))
        for e in scene.tree.sorted_edges:
            (i, j), (i2, j2) = lat.grid_edge_endpoints(e)
            key = -1 if reach is None else int(reach[e // 2])
            groups.setdefault(key, []).append(((i / n, j / n), (i2 / n, j2 / n)))
        width = _fmt(scene.tree_width)
        lines.append(f'<path d="{segs(border)}" stroke="black" stroke-width="{width}" fill="none"/>')
        for key in sorted(groups):
            color = "black" if key < 0 else hue_color(key)
            lines.append(
                f'<path d="{segs(groups[key])}" stroke="{color}" stroke-width="{width}" '
                f'stroke-linecap="round" fill="none"/>'
            )

    if scene.curve is not None:
        d = "M" + "L".join(" ".join(xy(x, y)) for x, y in scene.curve.points)
        lines.append(
            f'<path d="{d}" stroke="#d62728" stroke-width="{_fmt(scene.curve_width)}" '
            f'stroke-linejoin="round" fill="none"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
