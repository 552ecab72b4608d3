"""Monte Carlo experiments on fair trees: branch diagonality, curve coverage, walk maxima."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graphs import SquareLattice
from .io import write_text_atomic
from .peano import coverage_radius, hausdorff_distance, peano_curve, region, stopping_index
from .streams import derive_seed, make_rng
from .trees import SpanningTree, choices_from_tree, sample_fair_choices, tree_from_choices

log = logging.getLogger(__name__)

KINDS = ("diagonality", "convergence", "rw_max")
CSV_COLUMNS = ("experiment", "n", "trial", "seed", "statistic", "threshold", "pass")


# --- branches and diagonals -------------------------------------------------


def anchor_arc(lat: SquareLattice) -> list[tuple[int, int]]:
    """Vertices on ``x = 1/n`` bottom to top, then on ``y = 1 - 1/n`` left to right."""
    n = lat.n
    return [(1, j) for j in range(n)] + [(i, n - 1) for i in range(2, n + 1)]


def anchor_positions(n: int, m: int) -> list[int]:
    """Arc positions nearest the fractions ``j/(m+1)``, restricted to non-boundary vertices."""
    last = 2 * n - 2
    out = []
    for j in range(1, m + 1):
        target = j * last / (m + 1)
        pos = math.ceil(target - 0.5)  # halves go to the earlier vertex
        pos = min(max(pos, 1), last - 1)
        if pos not in out:
            out.append(pos)
    return out


@dataclass
class BranchBundle:
    lattice: SquareLattice
    requested: int
    anchors: list[tuple[int, int]]
    paths: list[np.ndarray]  # each (steps+1, 2) array of lattice (i, j)

    @property
    def count(self) -> int:
        return len(self.anchors)

    def anchor_points(self) -> np.ndarray:
        return np.array([(i / self.lattice.n, j / self.lattice.n) for i, j in self.anchors])

    def points(self, resolution: float | None = None) -> np.ndarray:
        """Union of the path polylines, sampled at ``resolution`` (vertices only if None)."""
        n = self.lattice.n
        chunks = [_densify(p / n, resolution) if resolution else p / n for p in self.paths]
        return np.vstack(chunks)

    def disjoint(self) -> bool:
        seen: set[tuple[int, int]] = set()
        for p in self.paths:
            here = set(map(tuple, p.tolist()))
            if seen & here:
                return False
            seen |= here
        return True


def _densify(poly: np.ndarray, step: float) -> np.ndarray:
    if len(poly) == 1:
        return poly
    seg = np.diff(poly, axis=0)
    lengths = np.hypot(seg[:, 0], seg[:, 1])
    k = max(1, int(math.ceil(lengths.max() / step)))
    s = np.arange(k) / k
    pts = (poly[:-1, None, :] + s[None, :, None] * seg[:, None, :]).reshape(-1, 2)
    return np.vstack([pts, poly[-1:]])


def _walk_branch(right: np.ndarray, n: int, start: tuple[int, int]) -> np.ndarray:
    i, j = start
    out = [(i, j)]
    while j > 0 and i < n:
        if right[(j - 1) * (n - 1) + i - 1]:
            i += 1
        else:
            j -= 1
        out.append((i, j))
    return np.array(out, dtype=np.int64)


def _bundle(lat: SquareLattice, right: np.ndarray, m) -> BranchBundle:
    if m < 1:
        raise ValueError(f"need at least one branch, got m={m}")
    m = int(m)
    arc = anchor_arc(lat)
    anchors = [arc[p] for p in anchor_positions(lat.n, m)]
    if len(anchors) < m:
        log.info("only %d distinct anchors available for m=%d at n=%d", len(anchors), m, lat.n)
    paths = [_walk_branch(right, lat.n, a) for a in anchors]
    return BranchBundle(lat, m, anchors, paths)


def branch_paths(lat: SquareLattice, t: SpanningTree, m) -> BranchBundle:
    """Follow the fair tree right/down from ``floor(m)`` evenly spread anchors to the bottom/right side."""
    return _bundle(lat, choices_from_tree(lat.grid, t), m)


@dataclass
class DiagonalLines:
    levels: np.ndarray
    segments: np.ndarray  # (m, 2, 2) endpoints
    resolution: float

    @property
    def points(self) -> np.ndarray:
        return np.vstack([_densify(s, self.resolution) for s in self.segments])


def diagonal_segment(level: float) -> np.ndarray:
    """The part of ``x + y = level`` inside the closed unit square."""
    if level <= 1:
        return np.array([[0.0, level], [level, 0.0]])
    return np.array([[level - 1, 1.0], [1.0, level - 1]])


def diagonal_lines(lat: SquareLattice, anchors, resolution: float) -> DiagonalLines:
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    pts = np.atleast_2d(np.asarray(anchors, dtype=float))
    levels = pts.sum(axis=1)
    return DiagonalLines(levels, np.array([diagonal_segment(c) for c in levels]), resolution)


def branch_count(n: int) -> int:
    return int(math.floor(n**0.25 + 1e-12))


def diagonality_threshold(n: int) -> float:
    return 0.5 * n**-0.25


def convergence_threshold(n: int) -> float:
    return 3 * n**-0.25 + math.sqrt(2) / (2 * n)


@dataclass
class DiagonalityResult:
    statistic: float
    bundle: BranchBundle
    lines: DiagonalLines


def diagonality_details(n: int, rng: np.random.Generator, resolution: float | None = None) -> DiagonalityResult:
    if n < 16:
        raise ValueError("diagonality trials need n >= 16")
    lat = SquareLattice(n)
    res = resolution or 1.0 / (2 * n)
    right = sample_fair_choices(lat.node_count, rng)
    bundle = _bundle(lat, right, branch_count(n))
    lines = diagonal_lines(lat, bundle.anchor_points(), res)
    stat = hausdorff_distance(bundle.points(res), lines.points)
    return DiagonalityResult(stat, bundle, lines)


def diagonality_trial(n: int, rng: np.random.Generator) -> float:
    """Hausdorff distance between the ``n^(1/4)`` branches of a fresh fair tree and their diagonals."""
    return diagonality_details(n, rng).statistic


DEFAULT_B_GRID = tuple(np.linspace(0.0, 2.0, 21).tolist())


@dataclass
class ConvergenceResult:
    b_grid: np.ndarray
    radii: np.ndarray

    @property
    def supremum(self) -> float:
        return float(self.radii.max())


def convergence_trial(n: int, b_grid, rng: np.random.Generator) -> ConvergenceResult:
    """Coverage radius of ``Q_b`` by the curve stopped on leaving ``Q_b``, for each ``b``."""
    if n < 2:
        raise ValueError("convergence trials need n >= 2")
    lat = SquareLattice(n)
    t = tree_from_choices(lat.grid, sample_fair_choices(lat.grid.node_count, rng))
    curve = peano_curve(lat, t)
    bs = np.asarray(b_grid, dtype=float)
    radii = np.array([coverage_radius(curve, max(stopping_index(curve, b), 1), region(b, n)) for b in bs])
    return ConvergenceResult(bs, radii)


def rw_max_ratio_from_steps(steps) -> float:
    """``max_j |S_j| / sqrt(2 k log log k)`` for the walk with the given increments."""
    steps = np.asarray(steps, dtype=np.int64)
    k = steps.size
    if k < 16:
        raise ValueError("walk length must be at least 16")
    peak = int(np.abs(np.cumsum(steps)).max())
    return peak / math.sqrt(2 * k * math.log(math.log(k)))


def rw_max_ratio(k: int, rng: np.random.Generator) -> float:
    if k < 16:
        raise ValueError("walk length must be at least 16")
    steps = rng.integers(0, 2, size=k, dtype=np.int8) * 2 - 1
    return rw_max_ratio_from_steps(steps)


# --- experiment runner ------------------------------------------------------


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    kind: str
    n_list: list[int]
    trials: int
    seed: int = 0
    csv: str | None = None
    thresholds: dict[int, float] | None = None  # per n; defaults from the kind
    b_grid: tuple[float, ...] = DEFAULT_B_GRID
    workers: int | None = None
    pass_fraction_target: float | None = None  # recorded in the report only

    def validate(self):
        kind = self.kind.replace("-", "_")
        if kind not in KINDS:
            raise ConfigError("kind", f"expected one of {', '.join(KINDS)}, got {self.kind!r}")
        self.kind = kind
        if not self.n_list:
            raise ConfigError("n_list", "must name at least one n")
        floor = 16 if kind in ("diagonality", "rw_max") else 2
        for n in self.n_list:
            if int(n) != n or n < floor:
                raise ConfigError("n_list", f"every entry must be an integer >= {floor}, got {n!r}")
        if int(self.trials) != self.trials or self.trials < 0:
            raise ConfigError("trials", f"must be a nonnegative integer, got {self.trials!r}")
        if any(not 0 <= b <= 2 for b in self.b_grid):
            raise ConfigError("b_grid", "values must lie in [0, 2]")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers", "must be positive")

    def threshold(self, n: int) -> float:
        if self.thresholds and n in self.thresholds:
            return float(self.thresholds[n])
        return {"diagonality": diagonality_threshold, "convergence": convergence_threshold,
                "rw_max": lambda _: 1.5}[self.kind](n)


@dataclass
class TrialRecord:
    experiment: str
    n: int
    trial: int
    seed: int
    statistic: float
    threshold: float
    passed: bool
    seconds: float = 0.0


@dataclass
class Aggregate:
    n: int
    median: float
    p90: float
    max: float
    pass_fraction: float


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    records: list[TrialRecord] = field(default_factory=list)

    @property
    def aggregates(self) -> list[Aggregate]:
        out = []
        for n in self.config.n_list:
            stats = np.array([r.statistic for r in self.records if r.n == n])
            if stats.size == 0:
                continue
            passes = np.array([r.passed for r in self.records if r.n == n])
            out.append(Aggregate(n, float(np.median(stats)), float(np.quantile(stats, 0.9)),
                                 float(stats.max()), float(passes.mean())))
        return out

    def aggregate(self, n: int) -> Aggregate:
        return next(a for a in self.aggregates if a.n == n)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            w.writerow([r.experiment, r.n, r.trial, r.seed, repr(r.statistic), repr(r.threshold), int(r.passed)])
        for a in self.aggregates:
            buf.write(f"# n={a.n} median={a.median!r} p90={a.p90!r} max={a.max!r} pass_fraction={a.pass_fraction!r}\n")
        return buf.getvalue()


def _statistic(kind: str, n: int, b_grid, rng) -> float:
    if kind == "diagonality":
        return diagonality_trial(n, rng)
    if kind == "convergence":
        return convergence_trial(n, b_grid, rng).supremum
    return rw_max_ratio(n, rng)


def _run_trial(args) -> TrialRecord:
    kind, n, trial, seed, threshold, b_grid = args
    start = time.perf_counter()
    stat = float(_statistic(kind, n, b_grid, make_rng(seed)))
    return TrialRecord(kind, n, trial, seed, stat, threshold, stat <= threshold, time.perf_counter() - start)


def worker_count(requested: int | None = None) -> int:
    if requested:
        return requested
    env = os.environ.get("FAIRPEANO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("FAIRPEANO_THREADS", f"not an integer: {env!r}") from None
    return os.cpu_count() or 1


def write_atomic(path: str, text: str, field_name: str = "csv"):
    try:
        write_text_atomic(path, text)
    except OSError as exc:
        raise ConfigError(field_name, f"cannot write {path}: {exc.strerror or exc}") from None


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run every (n, trial) task with its own derived stream, in index order."""
    config.validate()
    report = ExperimentReport(config)
    if config.trials == 0:
        log.warning("experiment %s has zero trials; writing an empty report", config.kind)
    tasks = [
        (config.kind, int(n), t, derive_seed(config.seed, int(n), t), config.threshold(int(n)), tuple(config.b_grid))
        for n in config.n_list
        for t in range(config.trials)
    ]
    workers = min(worker_count(config.workers), max(len(tasks), 1))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            report.records = list(pool.map(_run_trial, tasks))
    else:
        report.records = [_run_trial(task) for task in tasks]
    if config.csv:
        write_atomic(config.csv, report.to_csv())
    return report
