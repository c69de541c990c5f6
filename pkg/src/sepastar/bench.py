"""Quality/efficiency benchmark: pair sampling, per-pair measurement and CSV reports."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .graph import Graph, gate_vertices, generate_bottleneck, generate_grid, load_dimacs, snap, symmetrize
from .landmarks import preprocess_dh, preprocess_fm, select_landmarks
from .search import EuclideanHeuristic, HeuristicEvaluator, ZeroHeuristic, astar, dijkstra_point_to_point
from .separators import PolylineSpec, Separator, axis_cuts, preprocess_sh, separator_from_polyline
from .store import bundle_size, evaluator_for, fnv1a64, make_bundle

BINS = 20
DEFAULT_SNAP_FRACTION = 0.01
DEFAULT_PAIRS = 1000
REDRAW_FACTOR = 100


class ConfigError(ValueError):
    """The benchmark configuration is inconsistent or incomplete."""


class SamplingError(RuntimeError):
    """Too many sampled points failed to snap or connect."""


class UnreachablePairError(ValueError):
    pass


# --------------------------------------------------------------------------
# Pair sampling
# --------------------------------------------------------------------------


class _Reachability:
    """Answers ``t reachable from s`` via strongly connected components plus a fallback search."""

    def __init__(self, g: Graph):
        self.g = g
        adj = csr_matrix((np.ones(g.m), (g.tails, g.heads)), shape=(g.n, g.n))
        _, self.scc = connected_components(adj, directed=True, connection="strong")

    def __call__(self, s: int, t: int) -> bool:
        if self.scc[s] == self.scc[t]:
            return True
        seen = {s}
        stack = [s]
        out = self.g.out_edges
        while stack:
            u = stack.pop()
            for v, _, _ in out[u]:
                if v == t:
                    return True
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return False


def sample_pairs(
    g: Graph, count: int, seed: int = 0, snap_fraction: float = DEFAULT_SNAP_FRACTION
) -> list[tuple[int, int]]:
    """Uniform points in the bounding box snapped to nodes, redrawn until usable.

    A draw is rejected when either point is farther than ``snap_fraction``
    times the box diagonal from every node, when both snap to the same node,
    or when the target cannot be reached from the source.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if not 0 < snap_fraction <= 1:
        raise ValueError("snap_fraction must lie in (0, 1]")
    x0, y0, x1, y1 = g.bounding_box
    max_snap = snap_fraction * math.hypot(x1 - x0, y1 - y0)
    rng = np.random.default_rng(seed)
    reach = _Reachability(g)
    pairs: list[tuple[int, int]] = []
    budget = REDRAW_FACTOR * count
    draws = 0
    while len(pairs) < count:
        if draws >= budget:
            raise SamplingError(
                f"only {len(pairs)} of {count} pairs after {draws} draws; snap_fraction {snap_fraction} too small?"
            )
        draws += 1
        pts = rng.uniform((x0, y0, x0, y0), (x1, y1, x1, y1))
        s = snap(g, (pts[0], pts[1]), max_snap)
        t = snap(g, (pts[2], pts[3]), max_snap)
        if s is None or t is None or s == t or not reach(s, t):
            continue
        pairs.append((s, t))
    return pairs


def pairs_fingerprint(pairs: Sequence[tuple[int, int]]) -> int:
    return fnv1a64(b"".join(struct.pack("<QQ", s, t) for s, t in pairs))


# --------------------------------------------------------------------------
# Measurements
# --------------------------------------------------------------------------


@dataclass
class Stats:
    """Mean, population std and a 20-bin histogram over [0, 1]."""

    values: list[float]
    mean: float = field(init=False)
    std: float = field(init=False)
    histogram: list[int] = field(init=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        self.mean = float(arr.mean()) if len(arr) else 0.0
        self.std = float(arr.std()) if len(arr) else 0.0
        self.histogram = histogram(arr)

    @property
    def pair_count_used(self) -> int:
        return len(self.values)


QualityStats = Stats
EfficiencyStats = Stats


def histogram(values: Sequence[float] | np.ndarray, bins: int = BINS) -> list[int]:
    idx = np.minimum((np.asarray(values, dtype=np.float64) * bins).astype(np.int64), bins - 1)
    return np.bincount(np.maximum(idx, 0), minlength=bins).tolist()


def _ground_truth(g: Graph, pairs) -> list[float]:
    costs = []
    for s, t in pairs:
        c = dijkstra_point_to_point(g, s, t).cost
        if not math.isfinite(c):
            raise UnreachablePairError(f"pair ({s}, {t}) is unreachable")
        costs.append(c)
    return costs


def quality(h_value: float, cost: float) -> float:
    if cost == 0:
        return 1.0  # only s == t or zero-weight paths, where h must also be 0
    q = h_value / cost
    if not 0.0 <= q <= 1.0 + 1e-9:
        raise AssertionError(f"quality {q} outside [0, 1]: heuristic is not admissible")
    return min(q, 1.0)


def measure_quality(g: Graph, h: HeuristicEvaluator, pairs, costs: Sequence[float] | None = None) -> Stats:
    """``h(s, t) / c(s, t)`` per pair against Dijkstra ground truth."""
    if costs is None:
        costs = _ground_truth(g, pairs)
    return Stats([quality(h.estimate(s, t), c) for (s, t), c in zip(pairs, costs)])


def efficiency(g: Graph, h: HeuristicEvaluator, s: int, t: int) -> tuple[float, int, int]:
    r = astar(g, s, t, h)
    if not r.found:
        raise UnreachablePairError(f"pair ({s}, {t}) is unreachable")
    return len(r.path) / r.settled_count, len(r.path), r.settled_count


def measure_efficiency(g: Graph, h: HeuristicEvaluator, pairs) -> Stats:
    """Fastest-path vertex count over vertices settled by A*, per pair."""
    return Stats([efficiency(g, h, s, t)[0] for s, t in pairs])


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------


@dataclass
class BenchConfig:
    graph: dict[str, Any]
    heuristics: list[dict[str, Any]]
    pairs: int = DEFAULT_PAIRS
    seed: int = 0
    snap_fraction: float = DEFAULT_SNAP_FRACTION
    output: str = "bench_out"
    symmetrize: bool = False
    dump_pairs: bool = False
    base_dir: Path = field(default_factory=Path.cwd)

    def __post_init__(self) -> None:
        if self.pairs < 1:
            raise ConfigError("pairs must be at least 1")
        if not 0 < self.snap_fraction <= 1:
            raise ConfigError("snap_fraction must lie in (0, 1]")
        if not self.heuristics:
            raise ConfigError("at least one heuristic is required")

    @classmethod
    def from_dict(cls, raw: dict[str, Any], base_dir: Path | None = None) -> "BenchConfig":
        known = {"graph", "heuristics", "pairs", "seed", "snap_fraction", "output", "symmetrize", "dump_pairs"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "graph" not in raw or "heuristics" not in raw:
            raise ConfigError("config needs 'graph' and 'heuristics'")
        return cls(**raw, base_dir=base_dir or Path.cwd())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "BenchConfig":
        path = Path(path)
        with path.open(encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(raw, base_dir=path.parent)

    def output_dir(self) -> Path:
        out = Path(self.output)
        return out if out.is_absolute() else self.base_dir / out


def build_graph(spec: dict[str, Any], base_dir: Path = Path(".")) -> Graph:
    spec = dict(spec)
    if "gr" in spec:
        gr, co = base_dir / spec["gr"], base_dir / spec["co"]
        with open(gr, encoding="utf-8") as fg, open(co, encoding="utf-8") as fc:
            return load_dimacs(fg, fc)
    kind = spec.pop("generator", None)
    if "speed_range" in spec:
        spec["speed_range"] = tuple(spec["speed_range"])
    try:
        if kind == "grid":
            return generate_grid(**spec)
        if kind == "bottleneck":
            return generate_bottleneck(**spec)
    except TypeError as exc:
        raise ConfigError(f"bad {kind} parameters: {exc}") from exc
    raise ConfigError(f"graph spec needs 'gr'/'co' paths or generator grid|bottleneck, got {kind!r}")


def separators_from_spec(g: Graph, entries: Sequence[dict[str, Any]]) -> list[Separator]:
    """Resolve separator entries: ``gate``, ``axis: [cx, cy]``, ``polyline`` or 1-based ``vertices``."""
    seps: list[Separator] = []
    for entry in entries:
        if entry.get("gate"):
            seps.append(Separator(gate_vertices(g)))
        elif "axis" in entry:
            cx, cy = entry["axis"]
            seps += [separator_from_polyline(g, spec) for spec in axis_cuts(g, int(cx), int(cy))]
        elif "polyline" in entry:
            seps.append(separator_from_polyline(g, PolylineSpec(entry["polyline"])))
        elif "vertices" in entry:
            ids = [int(v) - 1 for v in entry["vertices"]]
            if any(not 0 <= v < g.n for v in ids):
                raise ConfigError("separator vertex id outside the graph")
            seps.append(Separator(ids))
        else:
            raise ConfigError(f"unrecognised separator entry {entry!r}")
    return seps


@dataclass
class BuiltHeuristic:
    name: str
    kind: str
    k: int
    evaluator: HeuristicEvaluator
    bytes_stored: int
    seconds: float


def build_heuristic(g: Graph, spec: dict[str, Any]) -> BuiltHeuristic:
    kind = str(spec.get("kind", "")).lower()
    name = spec.get("name", kind)
    start = time.perf_counter()
    if kind == "zero":
        return BuiltHeuristic(name, kind, 0, ZeroHeuristic(), 0, 0.0)
    if kind == "euclidean":
        return BuiltHeuristic(name, kind, 0, EuclideanHeuristic.for_graph(g), 0, time.perf_counter() - start)
    if kind == "dh":
        if "landmarks" in spec:
            landmarks = [int(v) - 1 for v in spec["landmarks"]]
        else:
            landmarks = select_landmarks(g, int(spec.get("k", 4)), seed=int(spec.get("seed", 0)))
        payload = preprocess_dh(g, landmarks)
    elif kind == "fm":
        if not g.is_symmetric():
            raise ConfigError("FM needs an undirected graph; set \"symmetrize\": true")
        payload = preprocess_fm(
            g, int(spec.get("k", 4)), pivot_iters=int(spec.get("pivot_iters", 10)), seed=int(spec.get("seed", 0))
        )
    elif kind == "sh":
        payload = preprocess_sh(g, separators_from_spec(g, spec.get("separators", [])))
    else:
        raise ConfigError(f"unknown heuristic kind {kind!r}")
    seconds = time.perf_counter() - start
    bundle = make_bundle(g, payload)
    return BuiltHeuristic(name, kind, payload.k, evaluator_for(payload), bundle_size(bundle), seconds)


# --------------------------------------------------------------------------
# Runner
# --------------------------------------------------------------------------

SUMMARY_HEADER = [
    "heuristic",
    "kind",
    "k",
    "pairs",
    "quality_mean",
    "quality_std",
    "efficiency_path_over_settled_mean",
    "efficiency_path_over_settled_std",
    "bytes_stored",
    "pairs_fingerprint",
]
HIST_HEADER = ["bin_lower", "quality_count", "efficiency_count"]
PAIRS_HEADER = ["heuristic", "pair", "s", "t", "cost", "h", "quality", "path_vertices", "settled", "efficiency"]


@dataclass
class HeuristicResult:
    built: BuiltHeuristic
    quality: Stats
    efficiency: Stats
    rows: list[list[Any]]


@dataclass
class BenchResult:
    graph: Graph
    pairs: list[tuple[int, int]]
    results: list[HeuristicResult]
    files: dict[str, str]

    def by_name(self, name: str) -> HeuristicResult:
        for r in self.results:
            if r.built.name == name:
                return r
        raise KeyError(name)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _csv(rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def evaluate(g: Graph, built: BuiltHeuristic, pairs, costs: Sequence[float]) -> HeuristicResult:
    quals, effs, rows = [], [], []
    for i, ((s, t), c) in enumerate(zip(pairs, costs)):
        hv = built.evaluator.estimate(s, t)
        q = quality(hv, c)
        eff, plen, settled = efficiency(g, built.evaluator, s, t)
        quals.append(q)
        effs.append(eff)
        rows.append([built.name, i, s + 1, t + 1, repr(c), repr(hv), repr(q), plen, settled, repr(eff)])
    return HeuristicResult(built, Stats(quals), Stats(effs), rows)


def run_benchmark(config: BenchConfig, write: bool = True) -> BenchResult:
    """Build every configured heuristic, score them on one shared pair list and write CSVs.

    Outputs (in ``config.output``): ``summary.csv``, ``hist_<name>.csv``,
    ``pairs.csv`` when ``dump_pairs`` is set, and ``timings.json`` with the
    informational preprocessing wall times (kept out of the CSVs so those
    stay byte-identical across runs).
    """
    g = build_graph(config.graph, config.base_dir)
    if config.symmetrize:
        g = symmetrize(g)
    names = [str(h.get("name", h.get("kind", ""))).lower() for h in config.heuristics]
    if len(set(names)) != len(names):
        raise ConfigError("heuristic names must be unique; add a 'name' field")
    built = [build_heuristic(g, spec) for spec in config.heuristics]
    pairs = sample_pairs(g, config.pairs, config.seed, config.snap_fraction)
    fp = pairs_fingerprint(pairs)
    costs = _ground_truth(g, pairs)
    results = []
    for b in built:
        assert pairs_fingerprint(pairs) == fp, "pair list changed between heuristics"
        results.append(evaluate(g, b, pairs, costs))

    files: dict[str, str] = {}
    summary = [SUMMARY_HEADER]
    for r in results:
        summary.append([
            r.built.name, r.built.kind, r.built.k, len(pairs),
            _fmt(r.quality.mean), _fmt(r.quality.std),
            _fmt(r.efficiency.mean), _fmt(r.efficiency.std),
            r.built.bytes_stored, f"{fp:016x}",
        ])
        hist = [HIST_HEADER] + [
            [_fmt(i / BINS), qc, ec] for i, (qc, ec) in enumerate(zip(r.quality.histogram, r.efficiency.histogram))
        ]
        files[f"hist_{r.built.name}.csv"] = _csv(hist)
    files["summary.csv"] = _csv(summary)
    if config.dump_pairs:
        files["pairs.csv"] = _csv([PAIRS_HEADER] + [row for r in results for row in r.rows])
    files["timings.json"] = json.dumps({b.name: b.seconds for b in built}, indent=2) + "\n"
    if write:
        _write_outputs(config.output_dir(), files)
    return BenchResult(g, pairs, results, files)


def _write_outputs(out_dir: Path, files: dict[str, str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        for name, text in files.items():
            path = out_dir / name
            path.write_text(text, encoding="utf-8")
            written.append(path)
    except OSError:
        for path in written:
            path.unlink(missing_ok=True)
        raise
