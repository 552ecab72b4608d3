import json
import re
import shutil
import subprocess

import numpy as np
import pytest

from corpus import CORPUS
from fairpeano.cli import main
from fairpeano.graphs import GraphError, SquareLattice
from fairpeano.io import graph_to_obj, load_tree, tree_from_obj, tree_to_obj
from fairpeano.peano import dual_tree, peano_curve
from fairpeano.streams import make_rng
from fairpeano.svg import RenderScene, boundary_targets, hue_color, render_svg
from fairpeano.trees import choices_from_tree, is_spanning_tree, sample_fair_tree


def write_graph(tmp_path, name, weights=None):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(graph_to_obj(CORPUS[name], weights)))
    return str(path)


def run(*argv):
    return main([str(a) for a in argv])


def read(path):
    return json.loads(open(path).read())


# --- round trips and exit codes ----------------------------------------------


@pytest.mark.parametrize(
    "host",
    [["--n", 6], ["--grid", "2,3"], ["--grid", "3,1", "--algorithm", "wilson"], ["--n", 4, "--algorithm", "aldous-broder"]],
)
def test_sample_round_trip(tmp_path, host):
    out = tmp_path / "t.json"
    assert run("sample", *host, "--seed", 3, "--out", out) == 0
    obj = read(out)
    assert obj["format"] == 1 and obj["edges"] == sorted(obj["edges"])
    t, h = load_tree(str(out))
    assert is_spanning_tree(t.graph, t.edges)
    assert tree_to_obj(t, h) == obj


def test_sample_on_graph_file(tmp_path):
    g = write_graph(tmp_path, "k4_doubled")
    out = tmp_path / "t.json"
    assert run("sample", "--graph", g, "--algorithm", "wilson", "--seed", 1, "--out", out) == 0
    t, host = tree_from_obj(read(out))
    assert host.edges == CORPUS["k4_doubled"].edges and len(t.edges) == 3


def test_sample_requires_one_host(tmp_path, capsys):
    assert run("sample", "--n", 4, "--grid", "2,2") == 1
    assert run("sample") == 1
    g = write_graph(tmp_path, "triangle")
    assert run("sample", "--graph", g) == 1  # fair trees need a grid
    assert "error" in capsys.readouterr().err


def test_unknown_flag_is_input_error(capsys):
    assert run("sample", "--n", 4, "--bogus") == 1
    assert "--bogus" in capsys.readouterr().err
    assert run("teleport") == 1


@pytest.mark.parametrize(
    "content,field",
    [
        ('{"vertex_count": 2}', "edges"),
        ('{"vertex_count": 2, "edges": [[0, 1], [0]]}', "edges[1]"),
        ('{"vertex_count": 2, "edges": [[0, 0]]}', "edges"),
        ('{"vertex_count": "two", "edges": []}', "vertex_count"),
        ("{not json", "<document>"),
    ],
)
def test_malformed_graph_names_field(tmp_path, capsys, content, field):
    path = tmp_path / "g.json"
    path.write_text(content)
    assert run("probs", "--graph", path, "--exact") == 1
    assert f"field '{field}'" in capsys.readouterr().err


def test_bad_weights_file(tmp_path, capsys):
    g = write_graph(tmp_path, "digon")
    w = tmp_path / "w.json"
    w.write_text("[1.0, -2.0]")
    assert run("probs", "--graph", g, "--weights", w, "--exact") == 1
    assert "field 'weights'" in capsys.readouterr().err


def test_malformed_tree_file(tmp_path, capsys):
    path = tmp_path / "t.json"
    path.write_text('{"format": 1, "n": 3, "edges": [0, 1, 2]}')
    assert run("render", "--tree", path) == 1
    assert "field 'edges'" in capsys.readouterr().err
    path.write_text('{"format": 2, "n": 3, "edges": []}')
    assert run("render", "--tree", path) == 1
    assert "field 'format'" in capsys.readouterr().err


def test_failed_write_leaves_no_partial_file(tmp_path):
    target = tmp_path / "nope" / "t.json"
    assert run("sample", "--n", 4, "--out", target) == 1
    assert not target.exists()
    out = tmp_path / "x.json"
    assert run("sample", "--n", 4, "--out", out) == 0
    assert [p.name for p in tmp_path.iterdir() if p.name.startswith(".tmp")] == []


def test_feu_digon(tmp_path):
    out = tmp_path / "feu.json"
    assert run("feu", "--graph", write_graph(tmp_path, "digon"), "--solver", "exact", "--out", out) == 0
    obj = read(out)
    np.testing.assert_allclose(obj["eta"], [0.5, 0.5], atol=1e-12)
    assert obj["variance"] == pytest.approx(0, abs=1e-12)


def test_feu_nonconvergence_exit_code(tmp_path):
    g = write_graph(tmp_path, "triangle_pendant")
    assert run("feu", "--graph", g, "--solver", "frank-wolfe", "--max-iter", 1, "--tol", 1e-14, "--out", tmp_path / "o") == 2
    assert run("feu", "--graph", g, "--solver", "frank-wolfe", "--out", tmp_path / "o") == 0


def test_uniformize_exit_codes(tmp_path):
    g = write_graph(tmp_path, "grid_2x3")
    out = tmp_path / "u.json"
    assert run("uniformize", "--graph", g, "--out", out) == 0
    np.testing.assert_allclose(read(out)["probabilities"], 5 / 7, atol=1e-8)
    assert run("uniformize", "--graph", g, "--max-iter", 1, "--out", tmp_path / "v.json") == 2
    assert not (tmp_path / "v.json").exists()
    # not strictly 1-dense: rejected as input
    assert run("uniformize", "--graph", write_graph(tmp_path, "triangle_pendant")) == 1


def test_classify_and_deflate(tmp_path, capsys):
    assert run("classify", "--graph", write_graph(tmp_path, "grid_3x3")) == 0
    assert json.loads(capsys.readouterr().out) == {"class": "strictly_1_dense", "density": "12/8"}
    out = tmp_path / "d.json"
    assert run("deflate", "--graph", write_graph(tmp_path, "mgrid_2x2"), "--out", out) == 0
    assert len(read(out)["stages"]) == 4


def test_probs_exact_vs_monte_carlo(tmp_path):
    for name in ("triangle_pendant", "k4_doubled", "mgrid_2x2"):
        w = list(make_rng(5, len(name)).uniform(0.5, 2.0, CORPUS[name].edge_count))
        g = write_graph(tmp_path, name, w)
        assert run("probs", "--graph", g, "--exact", "--out", tmp_path / "e.json") == 0
        assert run("probs", "--graph", g, "--mc", 100_000, "--seed", 2, "--out", tmp_path / "m.json") == 0
        p = np.array(read(tmp_path / "e.json")["probabilities"])
        q = np.array(read(tmp_path / "m.json")["probabilities"])
        sd = np.sqrt(p * (1 - p) / 100_000)
        assert np.all(np.abs(p - q) <= 4 * sd + 1e-12)


def test_experiment_command(tmp_path, capsys):
    out = tmp_path / "e.csv"
    assert run("experiment", "--kind", "diagonality", "--n-list", "16,32", "--trials", 3, "--seed", 7,
               "--csv", out, "--workers", 1) == 0
    text = out.read_text()
    assert text.splitlines()[0] == "experiment,n,trial,seed,statistic,threshold,pass"
    assert len([line for line in text.splitlines() if not line.startswith("#")]) == 7
    assert "n=16 median=" in capsys.readouterr().out
    assert run("experiment", "--kind", "diagonality", "--n-list", "8", "--trials", 3) == 1
    assert run("experiment", "--kind", "diagonality", "--n-list", "x", "--trials", 3) == 1


# --- determinism ---------------------------------------------------------------


def command_lines(tmp_path):
    g = write_graph(tmp_path, "grid_2x3")
    mg = write_graph(tmp_path, "mgrid_2x2")
    tree = tmp_path / "tree.json"
    assert run("sample", "--n", 7, "--seed", 4, "--out", tree) == 0
    return {
        "sample": ["sample", "--n", 12, "--seed", 9],
        "sample_wust": ["sample", "--graph", g, "--algorithm", "aldous-broder", "--seed", 9],
        "render": ["render", "--tree", tree, "--dual", "--curve", "--color-mode", "closest-boundary-vertex"],
        "probs": ["probs", "--graph", mg, "--mc", 2000, "--seed", 1],
        "feu": ["feu", "--graph", g, "--solver", "frank-wolfe"],
        "classify": ["classify", "--graph", g],
        "deflate": ["deflate", "--graph", mg],
        "uniformize": ["uniformize", "--graph", g],
    }


def test_every_command_is_deterministic(tmp_path):
    for name, argv in command_lines(tmp_path).items():
        outs = []
        for k in range(2):
            path = tmp_path / f"{name}-{k}.out"
            assert run(*argv, "--out", path) == 0, name
            outs.append(path.read_bytes())
        assert outs[0] == outs[1], name
    for k in range(2):
        assert run("experiment", "--kind", "rw-max", "--n-list", "16,64", "--trials", 4, "--seed", 3,
                   "--csv", tmp_path / f"x{k}.csv") == 0
    assert (tmp_path / "x0.csv").read_bytes() == (tmp_path / "x1.csv").read_bytes()


@pytest.mark.skipif(shutil.which("fairpeano") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(["fairpeano", "sample", "--n", "3", "--seed", "1"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["n"] == 3
    proc = subprocess.run(["fairpeano", "feu"], capture_output=True, text=True)
    assert proc.returncode == 1


# --- rendering ------------------------------------------------------------------


def test_lattice_only_svg():
    svg = render_svg(RenderScene(SquareLattice(5)))
    assert svg.count("<circle") == 25
    assert "<path" not in svg


def test_render_tree_with_dual(tmp_path):
    tree, fig = tmp_path / "t.json", tmp_path / "fig.svg"
    assert run("sample", "--n", 5, "--seed", 1, "--out", tree) == 0
    assert run("render", "--tree", tree, "--dual", "--out", fig) == 0
    svg = fig.read_text()
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count("<circle") == 25 and 'stroke="#9a9a9a"' in svg and "#d62728" not in svg


def test_render_needs_tree_for_curve(capsys):
    assert run("render", "--n", 4, "--curve") == 1


def test_scene_rejects_mismatched_lattices():
    a, b = SquareLattice(4), SquareLattice(5)
    t = sample_fair_tree(a.grid, make_rng(0))
    with pytest.raises(GraphError):
        render_svg(RenderScene(b, tree=t))
    with pytest.raises(GraphError):
        render_svg(RenderScene(b, dual=dual_tree(a, t)))
    with pytest.raises(GraphError):
        render_svg(RenderScene(b, curve=peano_curve(a, t)))
    with pytest.raises(ValueError):
        render_svg(RenderScene(a, size=32))


def test_colors_follow_branch_endpoints():
    lat = SquareLattice(9)
    t = sample_fair_tree(lat.grid, make_rng(8))
    right = choices_from_tree(lat.grid, t)
    n = lat.n
    boundary = lat.boundary_vertices
    reach = boundary_targets(lat, right)
    for j in range(1, n):
        for i in range(1, n):
            a, b = i, j
            while a < n and b > 0:  # walk right/down until the boundary
                if right[lat.grid.index(a, b)]:
                    a += 1
                else:
                    b -= 1
            assert boundary[reach[lat.grid.index(i, j)]] == (a, b)
    svg = render_svg(RenderScene(lat, t, color_mode="closest_boundary_vertex"))
    used = set(re.findall(r'stroke="(hsl\([^"]+\))"', svg))
    assert used == {hue_color(k) for k in set(reach.tolist())}
